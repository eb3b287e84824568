#include "coaleps/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "coaleps/errors.hpp"

namespace coaleps {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kPowerIterTol = 1e-12;

std::string row_to_string(const Matrix& m, std::size_t i) {
    std::ostringstream os;
    os << "(";
    for (std::size_t j = 0; j < m.cols(); ++j) {
        if (j) os << ", ";
        os << m(i, j);
    }
    os << ")";
    return os.str();
}

}  // namespace

// ── IslandStructure ─────────────────────────────────────────────────────────

IslandStructure islands(std::vector<double> a, long long N) {
    IslandStructure s;
    s.L = static_cast<int>(a.size());
    s.a = std::move(a);
    s.N = N;
    return s;
}

namespace {

std::vector<std::string> structure_report(const IslandStructure& s) {
    std::vector<std::string> report;
    if (s.L < 1 || s.L != static_cast<int>(s.a.size()))
        report.push_back("island count does not match the proportion list");
    if (s.N < 2) report.push_back("total population size must be at least 2");
    double sum = 0.0;
    bool positive = true;
    for (double ak : s.a) {
        if (ak <= 0.0) positive = false;
        sum += ak;
    }
    if (!positive) report.push_back("island proportion not strictly positive");
    if (std::abs(sum - 1.0) > kRowSumTol) report.push_back("proportions sum != 1");
    return report;
}

}  // namespace

std::vector<IslandStructure::Block> island_blocks(const IslandStructure& s) {
    const auto problems = structure_report(s);
    if (!problems.empty()) throw ConfigError("invalid island structure: " + problems.front());
    std::vector<IslandStructure::Block> blocks(s.L);
    double cum = 0.0;
    long long prev = 0;
    for (int k = 0; k < s.L; ++k) {
        cum += s.a[k];
        long long bound = (k == s.L - 1)
                              ? s.N  // guard against floor(N*1.0) rounding down
                              : static_cast<long long>(std::floor(static_cast<double>(s.N) * cum));
        if (bound <= prev) {
            std::ostringstream os;
            os << "island " << k + 1 << " would be empty: N=" << s.N
               << " is too small for the given proportions";
            throw ConfigError(os.str());
        }
        blocks[k] = {prev + 1, bound};
        prev = bound;
    }
    return blocks;
}

// ── StochasticMatrix ────────────────────────────────────────────────────────

StochasticMatrix::StochasticMatrix(Matrix m) : m_(std::move(m)) {
    if (m_.rows() == 0 || m_.rows() != m_.cols())
        throw ConfigError("stochastic matrix must be square and nonempty");
    for (std::size_t i = 0; i < m_.rows(); ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < m_.cols(); ++j) {
            const double x = m_(i, j);
            if (x < -kRowSumTol || x > 1.0 + kRowSumTol)
                throw ConfigError("stochastic matrix entry outside [0,1]: row " +
                                  row_to_string(m_, i));
            sum += x;
        }
        if (std::abs(sum - 1.0) > kRowSumTol)
            throw ConfigError("stochastic matrix row does not sum to 1: row " +
                              row_to_string(m_, i));
    }
}

// ── Validation ──────────────────────────────────────────────────────────────

std::vector<std::string> validate(const EnvironmentSpec& spec, const IslandStructure& structure) {
    std::vector<std::string> report = structure_report(structure);
    auto add = [&](const std::string& s) { report.push_back(s); };

    if (report.empty()) {
        try {
            island_blocks(structure);
        } catch (const ConfigError& e) {
            add(e.what());
        }
    }

    if (spec.K < 1) add("environment needs at least one state");
    if (static_cast<int>(spec.matrices.size()) != spec.K)
        add("number of matrices != K");
    const int L = structure.L;
    for (const auto& sm : spec.matrices) {
        if (static_cast<int>(sm.dim()) != L) add("matrix dimension != island count");
        // row sums are certified by the StochasticMatrix constructor; re-check
        // here so hand-built specs fail loudly in report form too
        for (std::size_t i = 0; i < sm.dim(); ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < sm.dim(); ++j) sum += sm(i, j);
            if (std::abs(sum - 1.0) > kRowSumTol) add("row sum != 1");
        }
    }

    switch (spec.kind) {
        case DriverKind::Constant:
            if (spec.K != 1) add("constant driver requires exactly one state");
            break;
        case DriverKind::IIDWeights: {
            if (static_cast<int>(spec.weights.size()) != spec.K)
                add("IID weights size != K");
            double wsum = 0.0;
            for (double w : spec.weights) {
                if (w < 0.0) add("negative IID weight");
                wsum += w;
            }
            if (std::abs(wsum - 1.0) > kRowSumTol) add("IID weights do not sum to 1");
            break;
        }
        case DriverKind::MarkovChain: {
            if (spec.markov.rows() != static_cast<std::size_t>(spec.K) ||
                spec.markov.cols() != static_cast<std::size_t>(spec.K)) {
                add("Markov driver matrix is not K x K");
                break;
            }
            for (std::size_t i = 0; i < spec.markov.rows(); ++i) {
                double sum = 0.0;
                for (std::size_t j = 0; j < spec.markov.cols(); ++j) {
                    if (spec.markov(i, j) < 0.0) add("negative Markov driver entry");
                    sum += spec.markov(i, j);
                }
                if (std::abs(sum - 1.0) > kRowSumTol) add("Markov driver row sum != 1");
            }
            try {
                markov_stationary(spec.markov);
            } catch (const std::exception& e) {
                add(std::string("Markov driver: ") + e.what());
            }
            break;
        }
    }

    if (!spec.perturbations.empty()) {
        if (static_cast<int>(spec.perturbations.size()) != spec.K)
            add("perturbations given for some states only");
        for (const auto& d : spec.perturbations) {
            if (d.rows() != static_cast<std::size_t>(L) || d.cols() != static_cast<std::size_t>(L)) {
                add("perturbation dimension != island count");
                continue;
            }
            for (std::size_t i = 0; i < d.rows(); ++i) {
                double sum = 0.0;
                for (std::size_t j = 0; j < d.cols(); ++j) {
                    sum += d(i, j);
                    if (std::abs(d(i, j)) > spec.perturbation_bound + kRowSumTol)
                        add("perturbation entry exceeds declared bound");
                }
                if (std::abs(sum) > kRowSumTol) add("perturbation row sum != 0");
            }
        }
    }

    return report;
}

void require_valid(const EnvironmentSpec& spec, const IslandStructure& structure) {
    const auto problems = validate(spec, structure);
    if (problems.empty()) return;
    std::string msg = "invalid inputs:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw ConfigError(msg);
}

// ── Effective migration ─────────────────────────────────────────────────────

StochasticMatrix effective_migration(const EnvironmentSpec& spec, int state, long long N) {
    if (state < 0 || state >= spec.K) throw ConfigError("environment state out of range");
    const StochasticMatrix& base = spec.matrices[state];
    if (spec.perturbations.empty()) return base;
    const Matrix& d = spec.perturbations[state];
    Matrix out = base.matrix();
    const double invN = 1.0 / static_cast<double>(N);
    for (std::size_t i = 0; i < out.rows(); ++i)
        for (std::size_t j = 0; j < out.cols(); ++j) {
            out(i, j) += d(i, j) * invN;
            if (out(i, j) < 0.0 || out(i, j) > 1.0)
                throw ConfigError("perturbed migration probability outside [0,1]; N too small");
        }
    return StochasticMatrix(std::move(out));
}

// ── Markov stationary law ───────────────────────────────────────────────────

std::vector<double> markov_stationary(const Matrix& transition) {
    const std::size_t k = transition.rows();
    std::vector<double> v(k, 1.0 / static_cast<double>(k));
    for (int iter = 0; iter < 200000; ++iter) {
        std::vector<double> next = row_times(v, transition);
        double norm = 0.0;
        for (double x : next) norm += x;
        for (double& x : next) x /= norm;
        double delta = 0.0;
        for (std::size_t i = 0; i < k; ++i) delta = std::max(delta, std::abs(next[i] - v[i]));
        v = std::move(next);
        if (delta <= kPowerIterTol) return v;
    }
    throw ConvergenceError(
        "power iteration did not reach 1e-12; driver may not be irreducible and aperiodic");
}

// ── EnvironmentStream ───────────────────────────────────────────────────────

EnvironmentStream::EnvironmentStream(const EnvironmentSpec& spec, std::uint64_t seed,
                                     std::uint64_t stream_index, Direction direction,
                                     std::optional<StreamPurpose> purpose)
    : spec_(&spec),
      rng_(seed, stream_id(purpose.value_or(direction == Direction::Forward
                                                ? StreamPurpose::EnvForward
                                                : StreamPurpose::EnvBackward),
                           stream_index)),
      direction_(direction) {
    if (spec.K < 1) throw ConfigError("environment has no states");
    if (spec.kind == DriverKind::MarkovChain) {
        stationary_ = markov_stationary(spec.markov);
        if (direction_ == Direction::Forward) {
            kernel_ = spec.markov;
        } else {
            // time-reversed kernel R(i,j) = pi_j P(j,i) / pi_i
            const std::size_t k = spec.markov.rows();
            kernel_ = Matrix(k, k);
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < k; ++j)
                    kernel_(i, j) = stationary_[j] * spec.markov(j, i) / stationary_[i];
        }
    }
}

int EnvironmentStream::next() {
    ++cursor_;
    switch (spec_->kind) {
        case DriverKind::Constant:
            state_ = 0;
            break;
        case DriverKind::IIDWeights:
            state_ = static_cast<int>(rng_.discrete(spec_->weights.data(), spec_->weights.size()));
            break;
        case DriverKind::MarkovChain:
            if (!started_) {
                state_ = static_cast<int>(rng_.discrete(stationary_.data(), stationary_.size()));
                started_ = true;
            } else {
                state_ = static_cast<int>(
                    rng_.discrete(kernel_.row_ptr(static_cast<std::size_t>(state_)), kernel_.cols()));
            }
            break;
    }
    return state_;
}

void EnvironmentStream::reset() {
    rng_.seek(0);
    cursor_ = 0;
    state_ = 0;
    started_ = false;
}

std::vector<int> sample_env_stream(EnvironmentStream& stream, std::size_t length) {
    std::vector<int> states;
    states.reserve(length);
    for (std::size_t i = 0; i < length; ++i) states.push_back(stream.next());
    return states;
}

// ── Condition checks ────────────────────────────────────────────────────────

namespace {

using Pattern = std::vector<char>;  // L x L boolean, row-major

Pattern support_of(const StochasticMatrix& m) {
    const std::size_t l = m.dim();
    Pattern p(l * l, 0);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < l; ++j) p[i * l + j] = m(i, j) > 0.0 ? 1 : 0;
    return p;
}

Pattern bool_product(const Pattern& a, const Pattern& b, std::size_t l) {
    Pattern c(l * l, 0);
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t k = 0; k < l; ++k) {
            if (!a[i * l + k]) continue;
            for (std::size_t j = 0; j < l; ++j)
                if (b[k * l + j]) c[i * l + j] = 1;
        }
    return c;
}

}  // namespace

ConditionReport condition_checks(const EnvironmentSpec& spec) {
    const std::size_t l = static_cast<std::size_t>(spec.island_count());
    std::set<Pattern> closure;
    std::vector<Pattern> generators;
    generators.reserve(spec.matrices.size());
    for (const auto& m : spec.matrices) generators.push_back(support_of(m));

    std::vector<Pattern> frontier = generators;
    for (const auto& g : generators) closure.insert(g);
    while (!frontier.empty()) {
        std::vector<Pattern> next;
        for (const auto& p : frontier)
            for (const auto& g : generators) {
                Pattern q = bool_product(p, g, l);
                if (closure.insert(q).second) next.push_back(std::move(q));
            }
        frontier = std::move(next);
    }

    ConditionReport report;
    std::vector<char> seen(l * l, 0);
    for (const auto& p : closure) {
        for (std::size_t idx = 0; idx < l * l; ++idx)
            if (p[idx]) seen[idx] = 1;
        for (std::size_t j = 0; j < l; ++j) {
            bool full = true;
            for (std::size_t i = 0; i < l; ++i)
                if (!p[i * l + j]) {
                    full = false;
                    break;
                }
            if (full) report.st = true;
        }
    }
    report.irr = std::all_of(seen.begin(), seen.end(), [](char c) { return c != 0; });
    return report;
}

}  // namespace coaleps
