#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "coaleps/model.hpp"

namespace coaleps {

// ── Products of random stochastic matrices ──────────────────────────────────

/// Left-to-right product of the given matrices; the empty product is the
/// L x L identity. Products of stochastic matrices stay stochastic, which the
/// returned value re-certifies.
StochasticMatrix forward_product(const std::vector<StochasticMatrix>& matrices, int L);

/// sum_k gamma_k^2 / a_k: the genealogy speed-up factor of a population
/// whose lineages equilibrate to gamma over islands of relative size a.
double c_f_factor(const std::vector<double>& a, const std::vector<double>& gamma);

// ── Certified stationary vectors ────────────────────────────────────────────

/// Estimate of the random stationary vector for one environment realization,
/// with an interval certificate: the true limit lies in [alpha_k, beta_k]
/// for every column k, and `oscillation` is the widest such interval.
struct StationaryVectorEstimate {
    std::vector<double> gamma;       // midpoint of the certified intervals, renormalized
    std::vector<double> alpha, beta; // per-column certified bounds
    double oscillation = 1.0;
    int steps_used = 0;
    bool converged = false;
};

inline constexpr double kBackwardTolDefault = 1e-10;
inline constexpr int kBackwardMaxStepsDefault = 10000;

/// Multiply environment matrices in reverse order (each newly drawn, older
/// matrix left-multiplies the running product). Column ranges are nested, so
/// the running intersection is a shrinking certificate for the limit vector.
/// Stops once the widest interval is <= tol; `converged` is false if
/// max_steps is exhausted first (the ergodicity conditions may fail).
/// The stream must be a Backward-direction stream.
StationaryVectorEstimate backward_stationary(EnvironmentStream& stream,
                                             double tol = kBackwardTolDefault,
                                             int max_steps = kBackwardMaxStepsDefault);

// ── Effective-size factors ──────────────────────────────────────────────────

/// Monte Carlo moments of the random stationary vector and the derived
/// effective-size factors:
///   c_q  = sum_k E(gamma_k^2) / a_k   (quenched)
///   c_a  = sum_k (mean gamma_k)^2 / a_k  (annealed)
///   gap  = c_q - c_a = sum_k Var(gamma_k) / a_k  (an exact estimator identity
///          when all three use the same sample moments).
/// c_f is present only for constant environments, where gamma is deterministic
/// and all three factors coincide.
struct EPSReport {
    std::vector<double> gamma_mean;
    std::vector<double> gamma_second_moment;
    std::vector<double> gamma_variance;
    std::vector<double> se_gamma_mean;
    std::vector<double> se_gamma_second_moment;
    std::vector<double> se_gamma_variance;
    std::optional<double> c_f;
    double c_a = 0.0, c_q = 0.0, gap = 0.0;
    double se_c_a = 0.0, se_c_q = 0.0, se_gap = 0.0;
    int replicates = 0;
};

/// Draw `replicates` independent certified stationary vectors (disjoint
/// backward streams indexed by replicate) and assemble the moment report.
/// Throws ConvergenceError if any replicate fails to certify.
EPSReport estimate_eps(const EnvironmentSpec& spec, const IslandStructure& structure,
                       std::uint64_t seed, int replicates,
                       double tol = kBackwardTolDefault,
                       int max_steps = kBackwardMaxStepsDefault,
                       int workers = 1);

/// Single-path estimator of c_q: evolve gamma along one environment path via
/// gamma^(j+1) = gamma^(j) B^(j+1) and average c^(j) = sum_k (gamma_k^(j))^2 / a_k.
/// The standard error comes from batch means (the path is autocorrelated).
struct ErgodicAverage {
    double value = 0.0;
    double se = 0.0;
    long long path_length = 0;
    double warmup_oscillation = 0.0;
};

inline constexpr int kErgodicWarmupDefault = 1000;

ErgodicAverage ergodic_average_cq(const EnvironmentSpec& spec, const IslandStructure& structure,
                                  std::uint64_t seed, long long path_length,
                                  int warmup = kErgodicWarmupDefault);

// ── Shared path warm-up ─────────────────────────────────────────────────────

/// Build R = M(w_1)...M(w_steps) along a forward stream and certify the
/// stationary vector *at the end of the window*: for any extension of the
/// path into the past, column k of the full product lies inside the column
/// range of R. Returns the midpoint estimate plus the certificate width.
StationaryVectorEstimate path_warmup_gamma(EnvironmentStream& stream, int steps);

}  // namespace coaleps
