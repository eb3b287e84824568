#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coaleps/matrix.hpp"
#include "coaleps/rng.hpp"

namespace coaleps {

// ── Population structure ────────────────────────────────────────────────────

/// L islands with fixed proportions a_k of a total population of N
/// individuals. Individuals 1..N are assigned to islands by cumulative floor
/// boundaries, so island k holds labels
///   floor(N*(a_1+...+a_{k-1})) + 1  ..  floor(N*(a_1+...+a_k)).
/// Plain record; `validate` reports violations, entry points reject them.
struct IslandStructure {
    int L = 0;
    std::vector<double> a;
    long long N = 0;

    /// Inclusive 1-based label interval of island k (0-based k).
    struct Block {
        long long lo = 0, hi = 0;
        long long size() const { return hi - lo + 1; }
    };
};

/// Convenience maker: fills L from the proportion list.
IslandStructure islands(std::vector<double> a, long long N);

/// The L consecutive label intervals partitioning 1..N.
/// Throws ConfigError if the structure is invalid or any interval would be
/// empty (N too small for nonempty islands; rejected rather than adjusted).
std::vector<IslandStructure::Block> island_blocks(const IslandStructure& s);

// ── Stochastic matrices ─────────────────────────────────────────────────────

/// Row-stochastic L x L matrix of backward migration probabilities:
/// entry (i, j) is the probability that a lineage on island i descends from
/// island j one generation back. Validated on construction.
class StochasticMatrix {
public:
    explicit StochasticMatrix(Matrix m);

    std::size_t dim() const { return m_.rows(); }
    double operator()(std::size_t i, std::size_t j) const { return m_(i, j); }
    const Matrix& matrix() const { return m_; }
    const double* row(std::size_t i) const { return m_.row_ptr(i); }

private:
    Matrix m_;
};

// ── Environments ────────────────────────────────────────────────────────────

enum class DriverKind { Constant, IIDWeights, MarkovChain };

/// Finite-state stationary mixing law over backward migration matrices.
/// State u of the environment selects matrices[u]; the driver generates the
/// stationary state sequence. Optional per-state perturbations D (zero row
/// sums, entries bounded by perturbation_bound) model the weak N-dependence
/// B(N) = B + D/N.
struct EnvironmentSpec {
    int K = 0;
    std::vector<StochasticMatrix> matrices;
    DriverKind kind = DriverKind::Constant;
    std::vector<double> weights;  // IIDWeights: probability over states
    Matrix markov;                // MarkovChain: K x K transition matrix
    std::vector<Matrix> perturbations;  // empty, or one per state
    double perturbation_bound = 0.0;

    int island_count() const {
        return matrices.empty() ? 0 : static_cast<int>(matrices.front().dim());
    }
};

/// Report-style validation: returns human-readable descriptions of every
/// violated invariant (empty when valid).
std::vector<std::string> validate(const EnvironmentSpec& spec, const IslandStructure& structure);

/// Throw ConfigError listing the validation report if it is nonempty.
void require_valid(const EnvironmentSpec& spec, const IslandStructure& structure);

/// B + D/N for the given environment state; exact stochastic matrix.
/// Throws ConfigError if an entry would leave [0,1].
StochasticMatrix effective_migration(const EnvironmentSpec& spec, int state, long long N);

/// Stationary distribution of an irreducible aperiodic transition matrix by
/// power iteration to 1e-12. Throws ConvergenceError on failure.
std::vector<double> markov_stationary(const Matrix& transition);

/// Seeded realization of the environment state sequence. Deterministic:
/// identical (spec, seed, stream, direction) yields identical sequences.
///
/// Forward streams emit omega_1, omega_2, ... . Backward streams emit
/// progressively older states omega_0, omega_{-1}, ...; for Markov drivers
/// these follow the time-reversed kernel started at stationarity, so the
/// joint law matches reading a stationary path from the present into the past.
class EnvironmentStream {
public:
    enum class Direction { Forward, Backward };

    /// The stream identity defaults to (EnvForward|EnvBackward, stream_index)
    /// per the direction; pass an explicit purpose to carve out additional
    /// independent streams for the same replicate index.
    EnvironmentStream(const EnvironmentSpec& spec, std::uint64_t seed,
                      std::uint64_t stream_index = 0,
                      Direction direction = Direction::Forward,
                      std::optional<StreamPurpose> purpose = std::nullopt);

    int next();
    void reset();

    std::uint64_t generation() const { return cursor_; }
    const EnvironmentSpec& spec() const { return *spec_; }

private:
    const EnvironmentSpec* spec_;
    Philox rng_;
    Direction direction_;
    Matrix kernel_;                  // Markov: forward or reversed kernel
    std::vector<double> stationary_; // Markov: initial law
    std::uint64_t cursor_ = 0;
    int state_ = 0;
    bool started_ = false;
};

std::vector<int> sample_env_stream(EnvironmentStream& stream, std::size_t length);

// ── Ergodicity diagnostics ──────────────────────────────────────────────────

struct ConditionReport {
    bool irr = false;  // every (i,j) reachable with positive probability
    bool st = false;   // some product has a fully positive column
};

/// Closure of the support patterns of the spec's matrices under boolean
/// matrix products (breadth-first to saturation; the closure is finite).
/// irr: for every (i,j) some pattern in the closure is positive at (i,j).
/// st:  some pattern in the closure has a column with no zero entry.
/// For Markov drivers this treats every state sequence as attainable, which
/// is conservative when the driver's transition matrix has structural zeros.
ConditionReport condition_checks(const EnvironmentSpec& spec);

}  // namespace coaleps
