#pragma once

#include <cstdint>
#include <vector>

#include "coaleps/model.hpp"
#include "coaleps/rng.hpp"

namespace coaleps {

// ── Backward-in-time lineage tracing ────────────────────────────────────────
//
// Exact Wright-Fisher-with-islands rules: one generation back, a lineage on
// island i first draws a source island j from row i of the effective
// migration matrix, then a parent uniformly at random among that island's
// block of individuals. Lineages that pick the same (island, parent) merge.

struct Lineage {
    int island = 0;        // 0-based
    long long parent = 0;  // 1-based label within 1..N
};

struct LineageSet {
    std::vector<Lineage> entries;
    long long generation = 0;  // backward time u
};

struct StepResult {
    int level_drop = 0;        // lineages lost this generation
    int max_multiplicity = 1;  // largest group merging into one parent
};

/// One generation step for every lineage; merges duplicates in place.
StepResult step_back(LineageSet& lineages, const StochasticMatrix& b1n,
                     const std::vector<IslandStructure::Block>& blocks, Philox& rng);

// ── Sampling policies ───────────────────────────────────────────────────────

struct SamplingPolicy {
    enum class Kind { StationaryMultinomial, FixedIslands, UniformIndividuals };
    Kind kind = Kind::StationaryMultinomial;
    std::vector<int> islands;  // FixedIslands: one 0-based island per lineage

    /// Each replicate draws a fresh certified stationary vector and places
    /// every lineage's island iid from it. Default: minimizes finite-N
    /// transients without privileging any start.
    static SamplingPolicy stationary() { return {}; }
    static SamplingPolicy fixed(std::vector<int> islands) {
        return {Kind::FixedIslands, std::move(islands)};
    }
    static SamplingPolicy uniform_individuals() {
        return {Kind::UniformIndividuals, {}};
    }
};

// ── Simulation results ──────────────────────────────────────────────────────

struct CoalescenceSample {
    std::vector<double> t2;                        // pairwise times (generations)
    std::vector<std::vector<double>> tree_times;   // per replicate, T_k for k=n..2
    long long multi_merger_steps = 0;              // generations losing >= 2 lineages
    long long total_steps = 0;
    long long capped_replicates = 0;               // hit the generation cap (excluded from t2)
};

struct PairSummary {
    double mean_t2 = 0.0;
    double se_t2 = 0.0;
    double ne_hat = 0.0;   // = mean_t2
    double c_hat = 0.0;    // = N / mean_t2
    double se_c_hat = 0.0;
    long long replicates = 0;
    long long capped = 0;
};

inline constexpr long long kGenerationCapFactor = 100;  // cap = 100 * N

/// Trace pairs of lineages to their common ancestor, one independent
/// environment realization per replicate.
PairSummary simulate_T2(const EnvironmentSpec& spec, const IslandStructure& structure,
                        std::uint64_t seed, long long replicates,
                        const SamplingPolicy& policy, int workers = 1,
                        CoalescenceSample* samples = nullptr);

/// Trace n lineages to the root, recording the time spent at each level.
/// Simultaneous merges count as consecutive level drops within the same
/// generation, so intermediate levels get zero duration.
CoalescenceSample simulate_tree(const EnvironmentSpec& spec, const IslandStructure& structure,
                                std::uint64_t seed, int n, long long replicates,
                                const SamplingPolicy& policy, int workers = 1);

struct TreeDiagnostics {
    std::vector<double> mean_tk;          // k = 2..n
    std::vector<double> se_tk;
    std::vector<double> kingman_expected; // (N / c_scale) / binom(k,2)
    double ks_t2_exp1 = 0.0;              // KS of (c_scale/N) * T_2 vs Exp(1)
    double multi_merger_fraction = 0.0;
};

/// Kingman-shape diagnostics for a tree sample, scaled by a caller-supplied
/// effective-size factor (closed form or an independent estimate).
TreeDiagnostics tree_diagnostics(const CoalescenceSample& sample,
                                 const IslandStructure& structure, int n, double c_scale);

}  // namespace coaleps
