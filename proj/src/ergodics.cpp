#include "coaleps/ergodics.hpp"

#include <cassert>
#include <cmath>
#include <sstream>

#include "coaleps/errors.hpp"
#include "coaleps/parallel.hpp"
#include "coaleps/stats.hpp"

namespace coaleps {

StochasticMatrix forward_product(const std::vector<StochasticMatrix>& matrices, int L) {
    Matrix acc = Matrix::identity(static_cast<std::size_t>(L));
    for (const auto& m : matrices) {
        if (m.dim() != static_cast<std::size_t>(L))
            throw ConfigError("forward_product: dimension mismatch");
        acc = acc * m.matrix();
    }
    return StochasticMatrix(std::move(acc));
}

double c_f_factor(const std::vector<double>& a, const std::vector<double>& gamma) {
    if (a.size() != gamma.size()) throw ConfigError("c_f_factor: dimension mismatch");
    double c = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) c += gamma[k] * gamma[k] / a[k];
    return c;
}

namespace {

/// Shrink the certified column intervals with the current product's column
/// ranges. Intersection keeps the oscillation monotone even under rounding.
void tighten_intervals(const Matrix& r, std::vector<double>& alpha, std::vector<double>& beta) {
    for (std::size_t k = 0; k < r.cols(); ++k) {
        double lo = r(0, k), hi = r(0, k);
        for (std::size_t i = 1; i < r.rows(); ++i) {
            lo = std::min(lo, r(i, k));
            hi = std::max(hi, r(i, k));
        }
        alpha[k] = std::max(alpha[k], lo);
        beta[k] = std::min(beta[k], hi);
    }
}

double widest(const std::vector<double>& alpha, const std::vector<double>& beta) {
    double w = 0.0;
    for (std::size_t k = 0; k < alpha.size(); ++k) w = std::max(w, beta[k] - alpha[k]);
    return std::max(w, 0.0);
}

std::vector<double> midpoint_normalized(const std::vector<double>& alpha,
                                        const std::vector<double>& beta) {
    std::vector<double> g(alpha.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < g.size(); ++k) {
        g[k] = 0.5 * (alpha[k] + beta[k]);
        sum += g[k];
    }
    for (double& x : g) x /= sum;
    return g;
}

}  // namespace

StationaryVectorEstimate backward_stationary(EnvironmentStream& stream, double tol, int max_steps) {
    if (tol <= 0.0) throw ConfigError("backward_stationary: tol must be positive");
    const auto& spec = stream.spec();
    const std::size_t L = static_cast<std::size_t>(spec.island_count());

    StationaryVectorEstimate est;
    est.alpha.assign(L, 0.0);
    est.beta.assign(L, 1.0);

    Matrix r = Matrix::identity(L);
    double prev_osc = 1.0;
    for (int step = 1; step <= max_steps; ++step) {
        const int state = stream.next();
        r = spec.matrices[static_cast<std::size_t>(state)].matrix() * r;
        tighten_intervals(r, est.alpha, est.beta);
        const double osc = widest(est.alpha, est.beta);
        assert(osc <= prev_osc);
        (void)prev_osc;
        prev_osc = osc;
        est.steps_used = step;
        est.oscillation = osc;
        if (osc <= tol) {
            est.converged = true;
            break;
        }
    }
    est.gamma = midpoint_normalized(est.alpha, est.beta);
    return est;
}

StationaryVectorEstimate path_warmup_gamma(EnvironmentStream& stream, int steps) {
    const auto& spec = stream.spec();
    const std::size_t L = static_cast<std::size_t>(spec.island_count());
    Matrix r = Matrix::identity(L);
    for (int step = 0; step < steps; ++step) {
        const int state = stream.next();
        r = r * spec.matrices[static_cast<std::size_t>(state)].matrix();
    }
    StationaryVectorEstimate est;
    est.alpha.assign(L, 0.0);
    est.beta.assign(L, 1.0);
    tighten_intervals(r, est.alpha, est.beta);
    est.oscillation = widest(est.alpha, est.beta);
    est.steps_used = steps;
    est.converged = true;
    est.gamma = midpoint_normalized(est.alpha, est.beta);
    return est;
}

EPSReport estimate_eps(const EnvironmentSpec& spec, const IslandStructure& structure,
                       std::uint64_t seed, int replicates, double tol, int max_steps,
                       int workers) {
    if (replicates < 2) throw ConfigError("estimate_eps needs at least 2 replicates");
    require_valid(spec, structure);
    const std::size_t L = static_cast<std::size_t>(structure.L);
    if (spec.island_count() != structure.L)
        throw ConfigError("environment and structure disagree on island count");

    std::vector<std::vector<double>> gammas(static_cast<std::size_t>(replicates));
    std::vector<int> failed_steps(static_cast<std::size_t>(replicates), -1);
    parallel_for(static_cast<std::size_t>(replicates), workers, [&](std::size_t rep) {
        EnvironmentStream bs(spec, seed, rep, EnvironmentStream::Direction::Backward);
        StationaryVectorEstimate est = backward_stationary(bs, tol, max_steps);
        if (!est.converged) {
            failed_steps[rep] = est.steps_used;
            return;
        }
        gammas[rep] = std::move(est.gamma);
    });
    for (std::size_t rep = 0; rep < gammas.size(); ++rep)
        if (failed_steps[rep] >= 0) {
            std::ostringstream os;
            os << "replicate " << rep << " did not certify within " << failed_steps[rep]
               << " steps (oscillation > " << tol
               << "); the environment may violate the ergodicity conditions";
            throw ConvergenceError(os.str());
        }

    const double R = static_cast<double>(replicates);
    EPSReport report;
    report.replicates = replicates;
    report.gamma_mean.assign(L, 0.0);
    report.gamma_second_moment.assign(L, 0.0);
    for (const auto& g : gammas)
        for (std::size_t k = 0; k < L; ++k) {
            report.gamma_mean[k] += g[k];
            report.gamma_second_moment[k] += g[k] * g[k];
        }
    for (std::size_t k = 0; k < L; ++k) {
        report.gamma_mean[k] /= R;
        report.gamma_second_moment[k] /= R;
    }
    // population-style variance: keeps gap == c_q - c_a an exact identity
    report.gamma_variance.assign(L, 0.0);
    for (std::size_t k = 0; k < L; ++k)
        report.gamma_variance[k] =
            report.gamma_second_moment[k] - report.gamma_mean[k] * report.gamma_mean[k];

    // factors
    report.c_q = 0.0;
    report.c_a = 0.0;
    for (std::size_t k = 0; k < L; ++k) {
        report.c_q += report.gamma_second_moment[k] / structure.a[k];
        report.c_a += report.gamma_mean[k] * report.gamma_mean[k] / structure.a[k];
    }
    report.gap = report.c_q - report.c_a;

    // per-replicate summands for c_q and the centered gap
    std::vector<double> cq_summands(gammas.size()), gap_summands(gammas.size());
    for (std::size_t rep = 0; rep < gammas.size(); ++rep) {
        double s = 0.0, v = 0.0;
        for (std::size_t k = 0; k < L; ++k) {
            const double g = gammas[rep][k];
            const double d = g - report.gamma_mean[k];
            s += g * g / structure.a[k];
            v += d * d / structure.a[k];
        }
        cq_summands[rep] = s;
        gap_summands[rep] = v;
    }
    report.se_c_q = mean_se(cq_summands).se;
    report.se_gap = mean_se(gap_summands).se;

    // delta method for c_a: grad_k = 2 mean(gamma_k) / a_k
    {
        Matrix cov(L, L);
        for (const auto& g : gammas)
            for (std::size_t k = 0; k < L; ++k)
                for (std::size_t l = 0; l < L; ++l)
                    cov(k, l) += (g[k] - report.gamma_mean[k]) * (g[l] - report.gamma_mean[l]);
        double quad = 0.0;
        for (std::size_t k = 0; k < L; ++k)
            for (std::size_t l = 0; l < L; ++l) {
                const double gk = 2.0 * report.gamma_mean[k] / structure.a[k];
                const double gl = 2.0 * report.gamma_mean[l] / structure.a[l];
                quad += gk * gl * cov(k, l) / (R - 1.0);
            }
        report.se_c_a = std::sqrt(std::max(quad, 0.0) / R);
    }

    // per-island standard errors
    report.se_gamma_mean.assign(L, 0.0);
    report.se_gamma_second_moment.assign(L, 0.0);
    report.se_gamma_variance.assign(L, 0.0);
    for (std::size_t k = 0; k < L; ++k) {
        std::vector<double> firsts(gammas.size()), seconds(gammas.size());
        double m4 = 0.0;
        for (std::size_t rep = 0; rep < gammas.size(); ++rep) {
            const double g = gammas[rep][k];
            firsts[rep] = g;
            seconds[rep] = g * g;
            const double d = g - report.gamma_mean[k];
            m4 += d * d * d * d;
        }
        m4 /= R;
        report.se_gamma_mean[k] = mean_se(firsts).se;
        report.se_gamma_second_moment[k] = mean_se(seconds).se;
        const double var_of_var =
            std::max(m4 - report.gamma_variance[k] * report.gamma_variance[k], 0.0);
        report.se_gamma_variance[k] = std::sqrt(var_of_var / R);
    }

    if (spec.kind == DriverKind::Constant)
        report.c_f = c_f_factor(structure.a, gammas.front());

    return report;
}

ErgodicAverage ergodic_average_cq(const EnvironmentSpec& spec, const IslandStructure& structure,
                                  std::uint64_t seed, long long path_length, int warmup) {
    if (path_length < 1) throw ConfigError("ergodic_average_cq needs path_length >= 1");
    require_valid(spec, structure);
    if (spec.island_count() != structure.L)
        throw ConfigError("environment and structure disagree on island count");
    const std::size_t L = static_cast<std::size_t>(structure.L);

    EnvironmentStream path(spec, seed, 0, EnvironmentStream::Direction::Forward);
    StationaryVectorEstimate warm = path_warmup_gamma(path, warmup);
    std::vector<double> gamma = warm.gamma;

    // batch means for an autocorrelation-aware standard error
    const long long nbatches = std::min<long long>(100, path_length);
    std::vector<double> batch_sums(static_cast<std::size_t>(nbatches), 0.0);
    std::vector<long long> batch_counts(static_cast<std::size_t>(nbatches), 0);

    double total = 0.0;
    for (long long j = 0; j < path_length; ++j) {
        const int state = path.next();
        gamma = row_times(gamma, spec.matrices[static_cast<std::size_t>(state)].matrix());
        double c = 0.0;
        for (std::size_t k = 0; k < L; ++k) c += gamma[k] * gamma[k] / structure.a[k];
        total += c;
        const std::size_t b = static_cast<std::size_t>(j * nbatches / path_length);
        batch_sums[b] += c;
        batch_counts[b] += 1;
    }

    ErgodicAverage out;
    out.value = total / static_cast<double>(path_length);
    out.path_length = path_length;
    out.warmup_oscillation = warm.oscillation;
    if (nbatches >= 2) {
        std::vector<double> batch_means(batch_sums.size());
        for (std::size_t b = 0; b < batch_sums.size(); ++b)
            batch_means[b] = batch_sums[b] / static_cast<double>(batch_counts[b]);
        out.se = mean_se(batch_means).se;
    }
    return out;
}

}  // namespace coaleps
