#include "coaleps/config_chain.hpp"

#include <cassert>
#include <cmath>
#include <sstream>

#include "coaleps/ergodics.hpp"
#include "coaleps/errors.hpp"

namespace coaleps {

namespace {

constexpr int kStackedDimGuard = 5000;

double binom2(int x) { return 0.5 * static_cast<double>(x) * static_cast<double>(x - 1); }

double factorial(int m) {
    double f = 1.0;
    for (int i = 2; i <= m; ++i) f *= static_cast<double>(i);
    return f;
}

}  // namespace

// ── State enumeration ───────────────────────────────────────────────────────

namespace {

void enumerate_rec(int parts_left, int remaining, std::vector<int>& prefix,
                   std::vector<std::vector<int>>& out) {
    if (parts_left == 1) {
        prefix.push_back(remaining);
        out.push_back(prefix);
        prefix.pop_back();
        return;
    }
    for (int v = remaining; v >= 0; --v) {
        prefix.push_back(v);
        enumerate_rec(parts_left - 1, remaining - v, prefix, out);
        prefix.pop_back();
    }
}

}  // namespace

std::vector<std::vector<int>> enumerate_states(int L, int r) {
    if (L < 1 || r < 0) throw ConfigError("enumerate_states: need L >= 1 and r >= 0");
    std::vector<std::vector<int>> out;
    std::vector<int> prefix;
    enumerate_rec(L, r, prefix, out);
    return out;
}

ConfigStateSpace::ConfigStateSpace(int L, int n) : L_(L), n_(n) {
    if (L < 1 || n < 1) throw ConfigError("ConfigStateSpace: need L >= 1 and n >= 1");
    long long total = 0;
    for (int r = 1; r <= n; ++r) {
        auto states = enumerate_states(L, r);
        total += static_cast<long long>(states.size());
        if (total > kStackedDimGuard) {
            std::ostringstream os;
            os << "stacked configuration space exceeds " << kStackedDimGuard
               << " states for L=" << L << ", n=" << n;
            throw GuardError(os.str());
        }
        offsets_.push_back(total_dim_);
        total_dim_ += static_cast<int>(states.size());
        std::map<std::vector<int>, int> lut;
        for (std::size_t i = 0; i < states.size(); ++i) lut[states[i]] = static_cast<int>(i);
        lookup_.push_back(std::move(lut));
        levels_.push_back(std::move(states));
    }
}

int ConfigStateSpace::index_of(int r, const std::vector<int>& state) const {
    const auto& lut = lookup_[idx(r)];
    auto it = lut.find(state);
    if (it == lut.end()) throw ConfigError("state not found at requested level");
    return offsets_[idx(r)] + it->second;
}

// ── Coalescence machinery ───────────────────────────────────────────────────

double coalescence_functional(const std::vector<int>& x, const std::vector<double>& a) {
    assert(x.size() == a.size());
    double c = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) c += binom2(x[k]) / a[k];
    return c;
}

Matrix build_C(const ConfigStateSpace& space, const std::vector<double>& a) {
    const int dim = space.total_dim();
    Matrix c(static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
    for (int r = 1; r <= space.n(); ++r) {
        const auto& states = space.level(r);
        const int off = space.offset(r);
        for (std::size_t i = 0; i < states.size(); ++i) {
            const auto& x = states[i];
            const std::size_t row = static_cast<std::size_t>(off + static_cast<int>(i));
            c(row, row) = -coalescence_functional(x, a);
            if (r == 1) continue;
            std::vector<int> y = x;
            for (std::size_t k = 0; k < x.size(); ++k) {
                if (x[k] < 2) continue;
                y[k] -= 1;
                const std::size_t col = static_cast<std::size_t>(space.index_of(r - 1, y));
                c(row, col) = binom2(x[k]) / a[k];
                y[k] += 1;
            }
        }
    }
    return c;
}

// ── Migration lift ──────────────────────────────────────────────────────────

Matrix lift_migration(const StochasticMatrix& b1, int r) {
    const int L = static_cast<int>(b1.dim());
    const auto states = enumerate_states(L, r);
    Matrix out(states.size(), states.size());

    std::map<std::vector<int>, int> index;
    for (std::size_t i = 0; i < states.size(); ++i) index[states[i]] = static_cast<int>(i);

    for (std::size_t xi = 0; xi < states.size(); ++xi) {
        const auto& x = states[xi];
        // distribute island i's x_i lineages over destinations, one island at
        // a time; the running map holds partial destination counts
        std::map<std::vector<int>, double> dist;
        dist[std::vector<int>(static_cast<std::size_t>(L), 0)] = 1.0;
        for (int i = 0; i < L; ++i) {
            const int xi_count = x[static_cast<std::size_t>(i)];
            if (xi_count == 0) continue;
            const auto splits = enumerate_states(L, xi_count);
            std::map<std::vector<int>, double> next;
            for (const auto& [partial, p] : dist) {
                for (const auto& g : splits) {
                    double w = factorial(xi_count);
                    bool zero = false;
                    for (int j = 0; j < L; ++j) {
                        const int gj = g[static_cast<std::size_t>(j)];
                        if (gj == 0) continue;
                        const double b = b1(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
                        if (b == 0.0) {
                            zero = true;
                            break;
                        }
                        w *= std::pow(b, gj) / factorial(gj);
                    }
                    if (zero || w == 0.0) continue;
                    std::vector<int> dest = partial;
                    for (int j = 0; j < L; ++j) dest[static_cast<std::size_t>(j)] += g[static_cast<std::size_t>(j)];
                    next[dest] += p * w;
                }
            }
            dist = std::move(next);
        }
        for (const auto& [y, p] : dist)
            out(xi, static_cast<std::size_t>(index.at(y))) = p;
    }
    return out;
}

Matrix build_B(const ConfigStateSpace& space, const StochasticMatrix& b1) {
    const int dim = space.total_dim();
    Matrix b(static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
    for (int r = 1; r <= space.n(); ++r) {
        const Matrix br = lift_migration(b1, r);
        const int off = space.offset(r);
        for (std::size_t i = 0; i < br.rows(); ++i)
            for (std::size_t j = 0; j < br.cols(); ++j)
                b(static_cast<std::size_t>(off) + i, static_cast<std::size_t>(off) + j) = br(i, j);
    }
    return b;
}

// ── Multinomial profile and star product ────────────────────────────────────

std::vector<double> multinomial_weights(const std::vector<double>& gamma, int r) {
    const int L = static_cast<int>(gamma.size());
    const auto states = enumerate_states(L, r);
    std::vector<double> w(states.size());
    for (std::size_t i = 0; i < states.size(); ++i) {
        double p = factorial(r);
        for (int k = 0; k < L; ++k) {
            const int xk = states[i][static_cast<std::size_t>(k)];
            if (xk == 0) continue;
            p *= std::pow(gamma[static_cast<std::size_t>(k)], xk) / factorial(xk);
        }
        w[i] = p;
    }
    return w;
}

Matrix build_P(const ConfigStateSpace& space, const std::vector<double>& gamma) {
    const int dim = space.total_dim();
    Matrix p(static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
    for (int r = 1; r <= space.n(); ++r) {
        const auto weights = multinomial_weights(gamma, r);
        const int off = space.offset(r);
        for (int i = 0; i < space.level_dim(r); ++i)
            for (std::size_t j = 0; j < weights.size(); ++j)
                p(static_cast<std::size_t>(off + i), static_cast<std::size_t>(off) + j) = weights[j];
    }
    return p;
}

Matrix star_product(const Matrix& g, const Matrix& p, const ConfigStateSpace& space) {
    const int n = space.n();
    if (g.rows() != static_cast<std::size_t>(n) || g.cols() != static_cast<std::size_t>(n))
        throw ConfigError("star_product: G must be n x n");
    if (p.rows() != static_cast<std::size_t>(space.total_dim()))
        throw ConfigError("star_product: P must live on the stacked space");
    Matrix out(p.rows(), p.cols());
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j) {
            const double gij = g(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1));
            if (gij == 0.0) continue;
            const int oi = space.offset(i), oj = space.offset(j);
            for (int row = 0; row < space.level_dim(i); ++row)
                for (int col = 0; col < space.level_dim(j); ++col)
                    out(static_cast<std::size_t>(oi + row), static_cast<std::size_t>(oj + col)) =
                        gij * p(static_cast<std::size_t>(oj), static_cast<std::size_t>(oj + col));
        }
    return out;
}

Matrix collapse(const Matrix& r, const ConfigStateSpace& space, const std::vector<int>& anchors) {
    const int n = space.n();
    if (static_cast<int>(anchors.size()) != n)
        throw ConfigError("collapse: need one anchor per level");
    Matrix out(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) {
        const int anchor = anchors[static_cast<std::size_t>(i - 1)];
        if (anchor < 0 || anchor >= space.level_dim(i))
            throw ConfigError("collapse: anchor index out of range");
        const std::size_t row = static_cast<std::size_t>(space.offset(i) + anchor);
        for (int j = 1; j <= n; ++j) {
            double sum = 0.0;
            for (int col = 0; col < space.level_dim(j); ++col)
                sum += r(row, static_cast<std::size_t>(space.offset(j) + col));
            out(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - 1)) = sum;
        }
    }
    return out;
}

// ── Rate matrix and exponential ─────────────────────────────────────────────

Matrix build_Q(int n) {
    if (n < 1) throw ConfigError("build_Q: need n >= 1");
    Matrix q(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
    for (int i = 2; i <= n; ++i) {
        q(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(i - 1)) = -binom2(i);
        q(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(i - 2)) = binom2(i);
    }
    return q;
}

Matrix mat_exp(const Matrix& m, double t, double tol) {
    if (m.rows() != m.cols()) throw ConfigError("mat_exp: matrix must be square");
    if (tol <= 0.0) throw ConfigError("mat_exp: tol must be positive");
    Matrix a = m * t;

    constexpr double kTheta = 0.5;
    int squarings = 0;
    double norm = a.max_row_sum_norm();
    while (norm > kTheta) {
        a *= 0.5;
        norm *= 0.5;
        ++squarings;
    }

    constexpr int kTerms = 24;
    Matrix sum = Matrix::identity(a.rows());
    Matrix term = Matrix::identity(a.rows());
    for (int k = 1; k <= kTerms; ++k) {
        term = term * a;
        term *= 1.0 / static_cast<double>(k);
        sum += term;
    }
    // remainder of the truncated series, then growth through the squarings
    double err = std::pow(kTheta, kTerms + 1) / factorial(kTerms + 1) / (1.0 - kTheta);
    for (int s = 0; s < squarings; ++s) {
        const double sn = sum.max_row_sum_norm();
        err = err * (2.0 * sn + err);
        sum = sum * sum;
    }
    if (err > tol) {
        std::ostringstream os;
        os << "mat_exp error bound " << err << " exceeds tol " << tol;
        throw ConvergenceError(os.str());
    }
    return sum;
}

// ── Finite-N chain and limit checks ─────────────────────────────────────────

Matrix transition_matrix(const StochasticMatrix& b1n, const ConfigStateSpace& space,
                         const std::vector<double>& a, long long N) {
    double cmax = 0.0;
    for (const auto& x : space.level(space.n()))
        cmax = std::max(cmax, coalescence_functional(x, a));
    if (static_cast<double>(N) <= cmax) {
        std::ostringstream os;
        os << "transition_matrix: need N > max coalescence rate " << cmax << ", got N=" << N;
        throw ConfigError(os.str());
    }
    Matrix inner = build_C(space, a);
    inner *= 1.0 / static_cast<double>(N);
    inner += Matrix::identity(static_cast<std::size_t>(space.total_dim()));
    return build_B(space, b1n) * inner;
}

FixedEnvLimitResult fixed_env_limit_check(const StochasticMatrix& b1,
                                          const IslandStructure& structure, int n,
                                          long long N, double t,
                                          const std::vector<int>& anchors) {
    ConfigStateSpace space(structure.L, n);
    FixedEnvLimitResult res;
    res.gamma = markov_stationary(b1.matrix());
    res.c_f = c_f_factor(structure.a, res.gamma);

    const Matrix pi = transition_matrix(b1, space, structure.a, N);
    const auto steps = static_cast<unsigned long long>(std::floor(static_cast<double>(N) * t));
    const Matrix power = matrix_power(pi, steps);
    res.collapsed = collapse(power, space, anchors);
    res.reference = mat_exp(build_Q(n), res.c_f * t);
    res.norm = (res.collapsed - res.reference).max_row_sum_norm();
    return res;
}

RandomEnvLimitResult random_env_limit_check(const EnvironmentSpec& spec,
                                            const IslandStructure& structure, int n,
                                            long long N, double t, std::uint64_t seed,
                                            int warmup) {
    ConfigStateSpace space(structure.L, n);
    EnvironmentStream path(spec, seed, 0, EnvironmentStream::Direction::Forward);

    StationaryVectorEstimate warm = path_warmup_gamma(path, warmup);
    if (warm.oscillation > 1e-6) {
        std::ostringstream os;
        os << "random_env_limit_check: warmup certificate " << warm.oscillation
           << " still above 1e-6 after " << warmup << " generations";
        throw ConvergenceError(os.str());
    }
    std::vector<double> gamma = warm.gamma;

    // one transition matrix per environment state; N is fixed along the path
    std::vector<Matrix> pi_by_state;
    pi_by_state.reserve(static_cast<std::size_t>(spec.K));
    for (int state = 0; state < spec.K; ++state)
        pi_by_state.push_back(
            transition_matrix(effective_migration(spec, state, N), space, structure.a, N));

    const long long steps = static_cast<long long>(std::floor(static_cast<double>(N) * t));
    Matrix product = Matrix::identity(static_cast<std::size_t>(space.total_dim()));
    double csum = 0.0;
    for (long long j = 0; j < steps; ++j) {
        const int state = path.next();
        product = product * pi_by_state[static_cast<std::size_t>(state)];
        // gamma and c^(j) evolve through the N-free matrices
        gamma = row_times(gamma, spec.matrices[static_cast<std::size_t>(state)].matrix());
        csum += c_f_factor(structure.a, gamma);
    }

    RandomEnvLimitResult res;
    res.warmup_oscillation = warm.oscillation;
    res.c_hat = steps > 0 ? csum / static_cast<double>(steps) : 0.0;
    const Matrix collapsed = collapse(product, space, space.default_anchors());
    const Matrix reference = mat_exp(build_Q(n), res.c_hat * t);
    res.norm = (collapsed - reference).max_row_sum_norm();
    return res;
}

}  // namespace coaleps
