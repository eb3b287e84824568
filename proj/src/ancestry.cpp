#include "coaleps/ancestry.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "coaleps/ergodics.hpp"
#include "coaleps/errors.hpp"
#include "coaleps/parallel.hpp"
#include "coaleps/stats.hpp"

namespace coaleps {

StepResult step_back(LineageSet& lineages, const StochasticMatrix& b1n,
                     const std::vector<IslandStructure::Block>& blocks, Philox& rng) {
    StepResult result;
    const std::size_t count = lineages.entries.size();
    const std::size_t L = b1n.dim();
    for (auto& lin : lineages.entries) {
        const int j = static_cast<int>(rng.discrete(b1n.row(static_cast<std::size_t>(lin.island)), L));
        const auto& block = blocks[static_cast<std::size_t>(j)];
        lin.island = j;
        lin.parent = block.lo + static_cast<long long>(rng.below(static_cast<std::uint64_t>(block.size())));
    }
    lineages.generation += 1;

    if (count > 1) {
        auto& es = lineages.entries;
        std::sort(es.begin(), es.end(), [](const Lineage& a, const Lineage& b) {
            return a.parent < b.parent;  // parent labels are globally unique
        });
        std::vector<Lineage> merged;
        merged.reserve(es.size());
        std::size_t i = 0;
        while (i < es.size()) {
            std::size_t j = i + 1;
            while (j < es.size() && es[j].parent == es[i].parent) ++j;
            merged.push_back(es[i]);
            result.max_multiplicity = std::max(result.max_multiplicity, static_cast<int>(j - i));
            i = j;
        }
        result.level_drop = static_cast<int>(es.size() - merged.size());
        es = std::move(merged);
    }
    return result;
}

namespace {

struct ReplicateSetup {
    const EnvironmentSpec* spec;
    const IslandStructure* structure;
    std::vector<IslandStructure::Block> blocks;
    std::vector<StochasticMatrix> effective;  // per environment state, at this N
    long long cap;
};

ReplicateSetup make_setup(const EnvironmentSpec& spec, const IslandStructure& structure) {
    require_valid(spec, structure);
    ReplicateSetup s{&spec, &structure, island_blocks(structure), {}, 0};
    s.effective.reserve(static_cast<std::size_t>(spec.K));
    for (int state = 0; state < spec.K; ++state)
        s.effective.push_back(effective_migration(spec, state, structure.N));
    s.cap = kGenerationCapFactor * structure.N;
    return s;
}

/// Initial lineage placement. Distinct individuals: collisions on the same
/// (island, parent) are redrawn.
LineageSet place_lineages(const ReplicateSetup& setup, const SamplingPolicy& policy, int n,
                          std::uint64_t seed, std::uint64_t rep, Philox& rng) {
    const auto& structure = *setup.structure;
    LineageSet set;
    set.entries.resize(static_cast<std::size_t>(n));

    auto label_is_taken = [&](int upto, long long label) {
        for (int j = 0; j < upto; ++j)
            if (set.entries[static_cast<std::size_t>(j)].parent == label) return true;
        return false;
    };

    if (policy.kind == SamplingPolicy::Kind::UniformIndividuals) {
        for (int i = 0; i < n; ++i) {
            long long label;
            do {
                label = 1 + static_cast<long long>(rng.below(static_cast<std::uint64_t>(structure.N)));
            } while (label_is_taken(i, label));
            int isl = 0;
            while (label > setup.blocks[static_cast<std::size_t>(isl)].hi) ++isl;
            set.entries[static_cast<std::size_t>(i)] = {isl, label};
        }
        return set;
    }

    std::vector<int> islands(static_cast<std::size_t>(n), 0);
    switch (policy.kind) {
        case SamplingPolicy::Kind::StationaryMultinomial: {
            EnvironmentStream placement(*setup.spec, seed, rep,
                                        EnvironmentStream::Direction::Backward,
                                        StreamPurpose::Placement);
            StationaryVectorEstimate est = backward_stationary(placement);
            if (!est.converged)
                throw ConvergenceError("stationary placement draw did not certify");
            for (auto& isl : islands)
                isl = static_cast<int>(rng.discrete(est.gamma.data(), est.gamma.size()));
            break;
        }
        case SamplingPolicy::Kind::FixedIslands:
            if (static_cast<int>(policy.islands.size()) != n)
                throw ConfigError("fixed-island policy needs one island per lineage");
            islands = policy.islands;
            for (int isl : islands)
                if (isl < 0 || isl >= structure.L) throw ConfigError("fixed island out of range");
            break;
        case SamplingPolicy::Kind::UniformIndividuals:
            break;  // handled above
    }

    for (int i = 0; i < n; ++i) {
        const auto& block = setup.blocks[static_cast<std::size_t>(islands[static_cast<std::size_t>(i)])];
        long long label;
        do {
            label = block.lo + static_cast<long long>(rng.below(static_cast<std::uint64_t>(block.size())));
        } while (label_is_taken(i, label));
        set.entries[static_cast<std::size_t>(i)] = {islands[static_cast<std::size_t>(i)], label};
    }
    return set;
}

struct ReplicateOutcome {
    double t2 = -1.0;                 // < 0 when capped
    std::vector<double> tree_times;   // T_k for k = n..2 (empty for pair runs)
    long long multi_merger_steps = 0;
    long long steps = 0;
    bool capped = false;
};

ReplicateOutcome run_replicate(const ReplicateSetup& setup, const SamplingPolicy& policy, int n,
                               std::uint64_t seed, std::uint64_t rep, bool track_tree) {
    Philox rng(seed, stream_id(StreamPurpose::Lineages, rep));
    EnvironmentStream env(*setup.spec, seed, rep, EnvironmentStream::Direction::Backward);
    LineageSet lineages = place_lineages(setup, policy, n, seed, rep, rng);

    ReplicateOutcome out;
    if (track_tree) out.tree_times.assign(static_cast<std::size_t>(n - 1), 0.0);

    long long level2_entry = -1;  // generation at which exactly 2 lineages remained
    if (n == 2) level2_entry = 0;

    while (static_cast<int>(lineages.entries.size()) > 1) {
        if (lineages.generation >= setup.cap) {
            out.capped = true;
            break;
        }
        const int before = static_cast<int>(lineages.entries.size());
        const int state = env.next();
        const StepResult step =
            step_back(lineages, setup.effective[static_cast<std::size_t>(state)], setup.blocks, rng);
        out.steps += 1;
        if (track_tree) out.tree_times[static_cast<std::size_t>(n - before)] += 1.0;
        if (step.level_drop >= 2) out.multi_merger_steps += 1;
        const int after = before - step.level_drop;
        if (before > 2 && after <= 2) level2_entry = lineages.generation;
        // a simultaneous merge past level 2 leaves T_2 = 0 for this replicate
        if (after == 1) out.t2 = static_cast<double>(lineages.generation - level2_entry);
    }
    return out;
}

}  // namespace

PairSummary simulate_T2(const EnvironmentSpec& spec, const IslandStructure& structure,
                        std::uint64_t seed, long long replicates, const SamplingPolicy& policy,
                        int workers, CoalescenceSample* samples) {
    if (replicates < 100) throw ConfigError("simulate_T2 needs at least 100 replicates");
    const ReplicateSetup setup = make_setup(spec, structure);

    std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(replicates));
    parallel_for(static_cast<std::size_t>(replicates), workers, [&](std::size_t rep) {
        outcomes[rep] = run_replicate(setup, policy, 2, seed, rep, false);
    });

    std::vector<double> t2;
    t2.reserve(outcomes.size());
    long long capped = 0, multi = 0, steps = 0;
    for (const auto& o : outcomes) {
        steps += o.steps;
        multi += o.multi_merger_steps;
        if (o.capped)
            ++capped;
        else
            t2.push_back(o.t2);
    }

    PairSummary summary;
    summary.replicates = replicates;
    summary.capped = capped;
    const MeanSE m = mean_se(t2);
    summary.mean_t2 = m.mean;
    summary.se_t2 = m.se;
    summary.ne_hat = m.mean;
    summary.c_hat = static_cast<double>(structure.N) / m.mean;
    summary.se_c_hat = static_cast<double>(structure.N) * m.se / (m.mean * m.mean);

    if (samples) {
        samples->t2 = std::move(t2);
        samples->multi_merger_steps = multi;
        samples->total_steps = steps;
        samples->capped_replicates = capped;
    }
    return summary;
}

CoalescenceSample simulate_tree(const EnvironmentSpec& spec, const IslandStructure& structure,
                                std::uint64_t seed, int n, long long replicates,
                                const SamplingPolicy& policy, int workers) {
    if (n < 2) throw ConfigError("simulate_tree needs n >= 2");
    if (replicates < 1) throw ConfigError("simulate_tree needs at least one replicate");
    const ReplicateSetup setup = make_setup(spec, structure);

    std::vector<ReplicateOutcome> outcomes(static_cast<std::size_t>(replicates));
    parallel_for(static_cast<std::size_t>(replicates), workers, [&](std::size_t rep) {
        outcomes[rep] = run_replicate(setup, policy, n, seed, rep, true);
    });

    CoalescenceSample sample;
    for (auto& o : outcomes) {
        sample.total_steps += o.steps;
        sample.multi_merger_steps += o.multi_merger_steps;
        if (o.capped) {
            ++sample.capped_replicates;
            continue;
        }
        if (o.t2 >= 0.0) sample.t2.push_back(o.t2);
        sample.tree_times.push_back(std::move(o.tree_times));
    }
    return sample;
}

TreeDiagnostics tree_diagnostics(const CoalescenceSample& sample,
                                 const IslandStructure& structure, int n, double c_scale) {
    TreeDiagnostics d;
    const double scale = c_scale / static_cast<double>(structure.N);
    for (int k = 2; k <= n; ++k) {
        std::vector<double> tk;
        tk.reserve(sample.tree_times.size());
        for (const auto& times : sample.tree_times)
            tk.push_back(times[static_cast<std::size_t>(n - k)]);
        const MeanSE m = mean_se(tk);
        d.mean_tk.push_back(m.mean);
        d.se_tk.push_back(m.se);
        const double pairs = 0.5 * static_cast<double>(k) * static_cast<double>(k - 1);
        d.kingman_expected.push_back(static_cast<double>(structure.N) / (c_scale * pairs));
    }
    if (!sample.t2.empty()) {
        std::vector<double> scaled;
        scaled.reserve(sample.t2.size());
        for (double t : sample.t2) scaled.push_back(t * scale);
        d.ks_t2_exp1 = ks_exp1(scaled);
    }
    if (sample.total_steps > 0)
        d.multi_merger_fraction = static_cast<double>(sample.multi_merger_steps) /
                                  static_cast<double>(sample.total_steps);
    return d;
}

}  // namespace coaleps
