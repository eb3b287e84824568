// coaleps: structured Wright-Fisher genealogies in stationary random
// environments. Subcommands:
//   eps       moment estimates of the effective-size factors c_f / c_a / c_q
//   simulate  backward Monte Carlo coalescence times (pairs or n-trees)
//   moehle    collapsed configuration-chain vs matrix-exponential error table
//   ergodics  scalar product recursions, certificates, uniformity checks
//   scenario  list / show the canned environments
//
// Every output file embeds (resolved config, seed, artifact version), and
// reruns with the same seed are byte-identical. Exit codes: 0 ok, 2 config
// error, 3 non-convergence, 4 resource guard.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "coaleps/ancestry.hpp"
#include "coaleps/config_chain.hpp"
#include "coaleps/config_io.hpp"
#include "coaleps/ergodics.hpp"
#include "coaleps/errors.hpp"
#include "coaleps/model.hpp"
#include "coaleps/parallel.hpp"
#include "coaleps/scenarios.hpp"
#include "coaleps/stats.hpp"
#include "coaleps/version.hpp"

namespace {

using coaleps::ConfigError;
using json = nlohmann::ordered_json;

std::string fmt(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

// ── Shared options ──────────────────────────────────────────────────────────

struct CommonOpts {
    std::string config_path;
    std::string scenario;
    std::vector<double> a;
    long long N = 1000;
    std::uint64_t seed = 1;
    int workers = 1;
    std::string out_dir = ".";
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool needs_env) {
    if (needs_env) {
        cmd->add_option("--config", opts.config_path, "JSON config file (islands + env)");
        cmd->add_option("--scenario", opts.scenario,
                        "canned environment: two-island-coin | favored-island | dummy");
        cmd->add_option("--a", opts.a, "island proportions (comma separated)")->delimiter(',');
        cmd->add_option("--N", opts.N, "total population size");
    }
    cmd->add_option("--seed", opts.seed, "master seed");
    cmd->add_option("--workers", opts.workers, "worker threads (never changes results)");
    cmd->add_option("--out-dir", opts.out_dir, "output directory");
}

coaleps::RunInputs resolve_inputs(const CommonOpts& opts) {
    if (!opts.config_path.empty()) {
        if (!opts.scenario.empty())
            throw ConfigError("--config and --scenario are mutually exclusive");
        return coaleps::load_config_file(opts.config_path);
    }
    if (opts.scenario.empty())
        throw ConfigError("either --config or --scenario is required");
    if (opts.a.empty())
        throw ConfigError("--scenario requires --a (island proportions)");
    coaleps::IslandStructure structure = coaleps::islands(opts.a, opts.N);

    coaleps::EnvironmentSpec env;
    if (opts.scenario == "two-island-coin") {
        if (structure.L != 2) throw ConfigError("two-island-coin needs exactly two islands");
        env = coaleps::two_island_coin();
    } else if (opts.scenario == "favored-island") {
        env = coaleps::favored_island(structure.L);
    } else if (opts.scenario == "dummy") {
        env = coaleps::dummy_island(structure);
    } else {
        throw ConfigError("unknown scenario: " + opts.scenario);
    }
    coaleps::require_valid(env, structure);
    return coaleps::RunInputs(std::move(structure), std::move(env));
}

std::optional<double> closed_form_cq(const CommonOpts& opts, const coaleps::IslandStructure& s) {
    if (opts.scenario == "two-island-coin")
        return coaleps::describe_two_island_coin(s.a).closed_form_c_q;
    if (opts.scenario == "favored-island")
        return coaleps::describe_favored_island(s.L, s.a).closed_form_c_q;
    if (opts.scenario == "dummy") return 1.0;
    return std::nullopt;
}

// ── Output plumbing ─────────────────────────────────────────────────────────

json run_header(const CommonOpts& opts, const coaleps::RunInputs& inputs) {
    json j;
    j["artifact_version"] = coaleps::kArtifactVersion;
    j["schema_version"] = 1;
    j["seed"] = opts.seed;
    j["config"] = coaleps::config_to_json(inputs.env, inputs.structure);
    return j;
}

void write_json(const std::string& dir, const std::string& name, const json& j) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir + "/" + name);
    if (!out) throw ConfigError("cannot write " + dir + "/" + name);
    out << j.dump(2) << "\n";
}

std::ofstream open_csv(const std::string& dir, const std::string& name, const json& header) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir + "/" + name);
    if (!out) throw ConfigError("cannot write " + dir + "/" + name);
    out << "# coaleps " << coaleps::kArtifactVersion << "\n";
    out << "# seed: " << header.at("seed") << "\n";
    out << "# config: " << header.at("config").dump() << "\n";
    return out;
}

/// Row-major matrix dump over the stacked configuration space, with a header
/// naming the state order.
void write_matrix_csv(const std::string& dir, const std::string& name,
                      const coaleps::ConfigStateSpace& space, const coaleps::Matrix& m,
                      const json& header) {
    auto out = open_csv(dir, name, header);
    out << "# states:";
    for (int r = 1; r <= space.n(); ++r)
        for (const auto& x : space.level(r)) {
            out << " (";
            for (std::size_t k = 0; k < x.size(); ++k) out << (k ? "," : "") << x[k];
            out << ")";
        }
    out << "\n";
    for (std::size_t i = 0; i < m.rows(); ++i) {
        for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? "," : "") << fmt(m(i, j));
        out << "\n";
    }
}

// ── eps ─────────────────────────────────────────────────────────────────────

struct EpsOpts {
    CommonOpts common;
    long long reps = 20000;
    double tol = coaleps::kBackwardTolDefault;
    int max_steps = coaleps::kBackwardMaxStepsDefault;
    long long path_length = 0;  // 0: skip the single-path estimator
};

int cmd_eps(const EpsOpts& opts) {
    const auto inputs = resolve_inputs(opts.common);
    const auto report =
        coaleps::estimate_eps(inputs.env, inputs.structure, opts.common.seed,
                              static_cast<int>(opts.reps), opts.tol, opts.max_steps,
                              opts.common.workers);

    json j = run_header(opts.common, inputs);
    json& r = j["result"];
    if (report.c_f)
        r["c_f"] = *report.c_f;
    else
        r["c_f"] = nullptr;
    r["c_a"] = report.c_a;
    r["c_q"] = report.c_q;
    r["gap"] = report.gap;
    r["se_c_a"] = report.se_c_a;
    r["se_c_q"] = report.se_c_q;
    r["se_gap"] = report.se_gap;
    r["gamma_mean"] = report.gamma_mean;
    r["gamma_second_moment"] = report.gamma_second_moment;
    r["gamma_variance"] = report.gamma_variance;
    r["se_gamma_mean"] = report.se_gamma_mean;
    r["se_gamma_second_moment"] = report.se_gamma_second_moment;
    r["se_gamma_variance"] = report.se_gamma_variance;
    r["replicates"] = report.replicates;

    double ergodic_cq = 0.0;
    if (opts.path_length > 0) {
        const auto avg = coaleps::ergodic_average_cq(inputs.env, inputs.structure,
                                                     opts.common.seed, opts.path_length);
        ergodic_cq = avg.value;
        r["ergodic_c_q"] = avg.value;
        r["ergodic_c_q_se"] = avg.se;
        r["ergodic_path_length"] = avg.path_length;
    }
    write_json(opts.common.out_dir, "eps_summary.json", j);

    // documented column order: c_f, c_a, c_q, gap, per-island moments, SEs,
    // replicates, seed
    auto csv = open_csv(opts.common.out_dir, "eps_summary.csv", j);
    csv << "c_f,c_a,c_q,gap";
    const int L = inputs.structure.L;
    for (int k = 1; k <= L; ++k) csv << ",gamma_mean_" << k;
    for (int k = 1; k <= L; ++k) csv << ",gamma_second_moment_" << k;
    for (int k = 1; k <= L; ++k) csv << ",gamma_variance_" << k;
    csv << ",se_c_a,se_c_q,se_gap,replicates,seed\n";
    csv << (report.c_f ? fmt(*report.c_f) : "") << "," << fmt(report.c_a) << ","
        << fmt(report.c_q) << "," << fmt(report.gap);
    for (double x : report.gamma_mean) csv << "," << fmt(x);
    for (double x : report.gamma_second_moment) csv << "," << fmt(x);
    for (double x : report.gamma_variance) csv << "," << fmt(x);
    csv << "," << fmt(report.se_c_a) << "," << fmt(report.se_c_q) << "," << fmt(report.se_gap)
        << "," << report.replicates << "," << opts.common.seed << "\n";

    std::printf("c_f  = %s\n", report.c_f ? fmt(*report.c_f).c_str() : "(random environment)");
    std::printf("c_a  = %.6f  (se %.2e)\n", report.c_a, report.se_c_a);
    std::printf("c_q  = %.6f  (se %.2e)\n", report.c_q, report.se_c_q);
    std::printf("gap  = %.6f  (se %.2e)\n", report.gap, report.se_gap);
    if (opts.path_length > 0)
        std::printf("ergodic c_q = %.6f (path %lld)\n", ergodic_cq, opts.path_length);
    return 0;
}

// ── simulate ────────────────────────────────────────────────────────────────

struct SimulateOpts {
    CommonOpts common;
    long long reps = 10000;
    int n = 2;
    std::string policy = "stationary";
    std::vector<int> fixed_islands;
    double c_scale = 0.0;  // 0: closed form if known, else moment estimate
};

coaleps::SamplingPolicy resolve_policy(const SimulateOpts& opts) {
    if (opts.policy == "stationary") return coaleps::SamplingPolicy::stationary();
    if (opts.policy == "uniform") return coaleps::SamplingPolicy::uniform_individuals();
    if (opts.policy == "fixed") {
        if (opts.fixed_islands.empty())
            throw ConfigError("--policy fixed requires --islands");
        return coaleps::SamplingPolicy::fixed(opts.fixed_islands);
    }
    throw ConfigError("unknown placement policy: " + opts.policy);
}

int cmd_simulate(const SimulateOpts& opts) {
    const auto inputs = resolve_inputs(opts.common);
    const auto policy = resolve_policy(opts);

    double c_scale = opts.c_scale;
    std::string c_scale_source = "flag";
    if (c_scale <= 0.0) {
        if (auto cf = closed_form_cq(opts.common, inputs.structure)) {
            c_scale = *cf;
            c_scale_source = "closed_form";
        } else {
            c_scale = coaleps::estimate_eps(inputs.env, inputs.structure, opts.common.seed, 2000,
                                            coaleps::kBackwardTolDefault,
                                            coaleps::kBackwardMaxStepsDefault, opts.common.workers)
                          .c_q;
            c_scale_source = "moment_estimate";
        }
    }

    json j = run_header(opts.common, inputs);
    json& r = j["result"];
    r["n"] = opts.n;
    r["policy"] = opts.policy;
    r["c_scale"] = c_scale;
    r["c_scale_source"] = c_scale_source;

    if (opts.n == 2) {
        coaleps::CoalescenceSample sample;
        const auto summary =
            coaleps::simulate_T2(inputs.env, inputs.structure, opts.common.seed, opts.reps, policy,
                                 opts.common.workers, &sample);
        auto diag = coaleps::tree_diagnostics(sample, inputs.structure, 2, c_scale);

        r["mean_t2"] = summary.mean_t2;
        r["se_t2"] = summary.se_t2;
        r["ne_hat"] = summary.ne_hat;
        r["c_hat"] = summary.c_hat;
        r["se_c_hat"] = summary.se_c_hat;
        r["replicates"] = summary.replicates;
        r["capped_replicates"] = summary.capped;
        r["ks_t2_exp1"] = diag.ks_t2_exp1;
        r["ks_critical_1pct"] = coaleps::ks_critical_1pct(sample.t2.size());
        r["multi_merger_fraction"] = diag.multi_merger_fraction;
        write_json(opts.common.out_dir, "simulate_summary.json", j);

        auto csv = open_csv(opts.common.out_dir, "t2_samples.csv", j);
        csv << "replicate,t2\n";
        for (std::size_t i = 0; i < sample.t2.size(); ++i)
            csv << i << "," << fmt(sample.t2[i]) << "\n";

        std::printf("mean T2 = %.3f (se %.3f), Ne_hat = %.3f, c_hat = %.5f (se %.2e)\n",
                    summary.mean_t2, summary.se_t2, summary.ne_hat, summary.c_hat,
                    summary.se_c_hat);
        std::printf("KS(scaled T2, Exp(1)) = %.5f  capped = %lld\n", diag.ks_t2_exp1,
                    summary.capped);
    } else {
        const auto sample = coaleps::simulate_tree(inputs.env, inputs.structure, opts.common.seed,
                                                   opts.n, opts.reps, policy, opts.common.workers);
        auto diag = coaleps::tree_diagnostics(sample, inputs.structure, opts.n, c_scale);
        r["replicates"] = opts.reps;
        r["capped_replicates"] = sample.capped_replicates;
        r["mean_tk"] = diag.mean_tk;
        r["se_tk"] = diag.se_tk;
        r["kingman_expected_tk"] = diag.kingman_expected;
        r["ks_t2_exp1"] = diag.ks_t2_exp1;
        r["multi_merger_fraction"] = diag.multi_merger_fraction;
        write_json(opts.common.out_dir, "simulate_summary.json", j);

        auto csv = open_csv(opts.common.out_dir, "tree_samples.csv", j);
        csv << "replicate";
        for (int k = opts.n; k >= 2; --k) csv << ",T_" << k;
        csv << "\n";
        for (std::size_t i = 0; i < sample.tree_times.size(); ++i) {
            csv << i;
            for (double t : sample.tree_times[i]) csv << "," << fmt(t);
            csv << "\n";
        }
        std::printf("tree levels k=%d..2: mean T_k vs (N/c)/binom(k,2)\n", opts.n);
        for (int k = 2; k <= opts.n; ++k)
            std::printf("  k=%d  %.3f  vs  %.3f\n", k,
                        diag.mean_tk[static_cast<std::size_t>(k - 2)],
                        diag.kingman_expected[static_cast<std::size_t>(k - 2)]);
        std::printf("multi-merger fraction = %.3e  capped = %lld\n", diag.multi_merger_fraction,
                    sample.capped_replicates);
    }
    return 0;
}

// ── moehle ──────────────────────────────────────────────────────────────────

struct MoehleOpts {
    CommonOpts common;
    int n = 3;
    double t = 1.0;
    std::vector<long long> n_list = {100, 200, 400, 800};
    int seeds = 0;  // 0: fixed-environment mode (constant matrix required)
    std::vector<double> fixed_b1;  // row-major L*L, fixed mode without scenario
    std::vector<int> anchors;
    int warmup = 1000;
    bool dump_matrices = false;
};

int cmd_moehle(const MoehleOpts& opts) {
    // resolve inputs; a bare --fixed-b1 needs only the structure
    std::optional<coaleps::RunInputs> inputs;
    coaleps::IslandStructure structure;
    if (!opts.fixed_b1.empty()) {
        if (opts.common.a.empty()) throw ConfigError("--fixed-b1 requires --a");
        structure = coaleps::islands(opts.common.a, opts.common.N);
        const std::size_t L = static_cast<std::size_t>(structure.L);
        if (opts.fixed_b1.size() != L * L)
            throw ConfigError("--fixed-b1 needs a row-major L*L list");
    } else {
        inputs = resolve_inputs(opts.common);
        structure = inputs->structure;
    }

    coaleps::ConfigStateSpace space(structure.L, opts.n);  // guard check up front
    std::vector<int> anchors = opts.anchors.empty() ? space.default_anchors() : opts.anchors;

    json j;
    if (inputs) {
        j = run_header(opts.common, *inputs);
    } else {
        j["artifact_version"] = coaleps::kArtifactVersion;
        j["schema_version"] = 1;
        j["seed"] = opts.common.seed;
        j["config"]["islands"]["a"] = structure.a;
        j["config"]["islands"]["N"] = structure.N;
        j["config"]["fixed_b1"] = opts.fixed_b1;
    }
    j["result"]["n"] = opts.n;
    j["result"]["t"] = opts.t;

    auto csv = open_csv(opts.common.out_dir, "moehle.csv", j);
    csv << "N,t,n,seed,norm,c_hat\n";

    json rows = json::array();
    if (opts.seeds <= 0) {
        // constant environment
        std::optional<coaleps::StochasticMatrix> b1;
        if (!opts.fixed_b1.empty()) {
            const std::size_t L = static_cast<std::size_t>(structure.L);
            coaleps::Matrix m(L, L);
            for (std::size_t i = 0; i < L; ++i)
                for (std::size_t k = 0; k < L; ++k) m(i, k) = opts.fixed_b1[i * L + k];
            b1.emplace(std::move(m));
        } else {
            if (inputs->env.kind != coaleps::DriverKind::Constant)
                throw ConfigError("fixed-environment mode needs a constant environment "
                                  "(use --seeds for random environments)");
            b1.emplace(inputs->env.matrices.front());
        }
        if (opts.dump_matrices) {
            write_matrix_csv(opts.common.out_dir, "matrix_B.csv", space,
                             coaleps::build_B(space, *b1), j);
            write_matrix_csv(opts.common.out_dir, "matrix_C.csv", space,
                             coaleps::build_C(space, structure.a), j);
        }
        for (long long N : opts.n_list) {
            auto res = coaleps::fixed_env_limit_check(*b1, structure, opts.n, N, opts.t, anchors);
            csv << N << "," << fmt(opts.t) << "," << opts.n << ",," << fmt(res.norm) << ","
                << fmt(res.c_f) << "\n";
            rows.push_back({{"N", N}, {"norm", res.norm}, {"c_hat", res.c_f}});
            if (opts.dump_matrices) {
                write_matrix_csv(opts.common.out_dir, "matrix_Pi_N" + std::to_string(N) + ".csv",
                                 space, coaleps::transition_matrix(*b1, space, structure.a, N),
                                 j);
                write_matrix_csv(opts.common.out_dir, "matrix_P.csv", space,
                                 coaleps::build_P(space, res.gamma), j);
            }
            std::printf("N=%6lld  t=%.3f  norm=%.6e  c_f=%.6f\n", N, opts.t, res.norm, res.c_f);
        }
    } else {
        if (!inputs) throw ConfigError("random-environment mode needs --scenario or --config");
        for (long long N : opts.n_list) {
            std::vector<double> norms(static_cast<std::size_t>(opts.seeds));
            std::vector<double> chats(static_cast<std::size_t>(opts.seeds));
            coaleps::parallel_for(norms.size(), opts.common.workers, [&](std::size_t s) {
                auto res = coaleps::random_env_limit_check(inputs->env, structure, opts.n, N,
                                                           opts.t, opts.common.seed + s,
                                                           opts.warmup);
                norms[s] = res.norm;
                chats[s] = res.c_hat;
            });
            for (std::size_t s = 0; s < norms.size(); ++s)
                csv << N << "," << fmt(opts.t) << "," << opts.n << "," << (opts.common.seed + s)
                    << "," << fmt(norms[s]) << "," << fmt(chats[s]) << "\n";
            const double med = coaleps::median(norms);
            rows.push_back({{"N", N}, {"median_norm", med}});
            std::printf("N=%6lld  t=%.3f  median norm over %d seeds = %.6e\n", N, opts.t,
                        opts.seeds, med);
        }
    }
    j["result"]["rows"] = rows;
    write_json(opts.common.out_dir, "moehle_summary.json", j);
    return 0;
}

// ── ergodics ────────────────────────────────────────────────────────────────

struct ErgodicsOpts {
    CommonOpts common;
    int u = 30;
    long long reps = 10000;
    int osc_steps = 60;
};

int cmd_ergodics(const ErgodicsOpts& opts) {
    // scalar recursions and the product dichotomy
    auto zres = coaleps::z_recursions(opts.common.seed, opts.u, 0);

    std::vector<double> z_samples;
    z_samples.reserve(static_cast<std::size_t>(opts.reps));
    double max_forward_residual = 0.0, max_backward_residual = 0.0;
    bool cauchy_ok = true;
    for (long long i = 0; i < opts.reps; ++i) {
        auto r = coaleps::z_recursions(opts.common.seed, opts.u, static_cast<std::uint64_t>(i));
        z_samples.push_back(r.z.back());
        max_forward_residual = std::max(max_forward_residual, r.forward_residual);
        max_backward_residual = std::max(max_backward_residual, r.backward_residual);
        for (std::size_t s = 0; s + 1 < r.z_star.size(); ++s)
            if (std::abs(r.z_star[s + 1] - r.z_star[s]) >
                std::ldexp(1.0, -static_cast<int>(s) - 1))
                cauchy_ok = false;
    }
    const double ks = coaleps::ks_uniform(z_samples);
    const double ks_crit = coaleps::ks_critical_1pct(z_samples.size());

    // oscillation certificates along one backward product of the coin model
    coaleps::EnvironmentSpec coin = coaleps::two_island_coin();
    coaleps::EnvironmentStream stream(coin, opts.common.seed, 0,
                                      coaleps::EnvironmentStream::Direction::Backward);
    coaleps::Matrix prod = coaleps::Matrix::identity(2);
    std::vector<double> alpha(2, 0.0), beta(2, 1.0), osc_path;
    for (int step = 0; step < opts.osc_steps; ++step) {
        prod = coin.matrices[static_cast<std::size_t>(stream.next())].matrix() * prod;
        for (std::size_t k = 0; k < 2; ++k) {
            const double lo = std::min(prod(0, k), prod(1, k));
            const double hi = std::max(prod(0, k), prod(1, k));
            alpha[k] = std::max(alpha[k], lo);
            beta[k] = std::min(beta[k], hi);
        }
        osc_path.push_back(std::max({beta[0] - alpha[0], beta[1] - alpha[1], 0.0}));
    }
    // observed per-step contraction (median of successive ratios)
    std::vector<double> ratios;
    for (std::size_t i = 0; i + 1 < osc_path.size(); ++i)
        if (osc_path[i] > 0.0 && osc_path[i + 1] > 0.0)
            ratios.push_back(osc_path[i + 1] / osc_path[i]);
    const double contraction = ratios.empty() ? 0.0 : coaleps::median(ratios);

    json j;
    j["artifact_version"] = coaleps::kArtifactVersion;
    j["schema_version"] = 1;
    j["seed"] = opts.common.seed;
    j["config"]["u"] = opts.u;
    j["config"]["reps"] = opts.reps;
    json& r = j["result"];
    r["ks_z_uniform"] = ks;
    r["ks_critical_1pct"] = ks_crit;
    r["max_forward_residual"] = max_forward_residual;
    r["max_backward_residual"] = max_backward_residual;
    r["z_star_cauchy_ok"] = cauchy_ok;
    r["oscillation_final"] = osc_path.back();
    r["oscillation_contraction_median"] = contraction;
    write_json(opts.common.out_dir, "ergodics_summary.json", j);

    auto csv = open_csv(opts.common.out_dir, "z_path.csv", j);
    csv << "step,z,z_star\n";
    for (std::size_t s = 0; s < zres.z.size(); ++s)
        csv << s << "," << fmt(zres.z[s]) << "," << fmt(zres.z_star[s]) << "\n";

    std::printf("KS(Z_%d, U(0,1)) = %.5f over %lld seeds (1%% critical %.5f)\n", opts.u, ks,
                opts.reps, ks_crit);
    std::printf("max residual: forward %.2e, backward %.2e; Z* Cauchy bound %s\n",
                max_forward_residual, max_backward_residual, cauchy_ok ? "holds" : "VIOLATED");
    std::printf("backward oscillation after %d steps: %.3e (median contraction %.3f/step)\n",
                opts.osc_steps, osc_path.back(), contraction);
    return 0;
}

// ── scenario ────────────────────────────────────────────────────────────────

void print_matrix(const coaleps::StochasticMatrix& m) {
    for (std::size_t i = 0; i < m.dim(); ++i) {
        std::printf("    [");
        for (std::size_t j = 0; j < m.dim(); ++j)
            std::printf("%s%g", j ? ", " : "", m(i, j));
        std::printf("]\n");
    }
}

int cmd_scenario(const std::string& action, const std::string& name,
                 const std::vector<double>& a_in) {
    if (action == "list") {
        std::printf("two-island-coin  two islands; a fair coin favors one island per generation\n");
        std::printf("favored-island   L islands; every lineage descends from the favored island\n");
        std::printf("dummy            constant environment matching the island proportions\n");
        return 0;
    }
    if (action != "show") throw ConfigError("scenario action must be list or show");
    const std::vector<double> a = a_in.empty() ? std::vector<double>{0.5, 0.5} : a_in;
    if (name == "two-island-coin") {
        auto d = coaleps::describe_two_island_coin(a);
        auto spec = coaleps::two_island_coin();
        std::printf("two-island-coin (a = %g, %g)\n", a[0], a[1]);
        std::printf("  equal-weight matrices:\n");
        for (const auto& m : spec.matrices) print_matrix(m);
        std::printf("  closed forms: c_a = (1/4)(1/a1 + 1/a2) = %g\n", *d.closed_form_c_a);
        std::printf("                c_q = (1/3)(1/a1 + 1/a2) = %g\n", *d.closed_form_c_q);
        std::printf("  (stationary probabilities are U(0,1); c_q = (4/3) c_a)\n");
    } else if (name == "favored-island") {
        auto d = coaleps::describe_favored_island(static_cast<int>(a.size()), a);
        auto spec = coaleps::favored_island(static_cast<int>(a.size()));
        std::printf("favored-island (L = %zu)\n", a.size());
        std::printf("  uniform-weight matrices (all rows = e_k):\n");
        for (const auto& m : spec.matrices) print_matrix(m);
        std::printf("  closed form: c_q = (1/L) sum_k 1/a_k = %g\n", *d.closed_form_c_q);
        std::printf("  (stationary vector is a uniformly chosen unit vector;\n");
        std::printf("   with equal islands c_q = L * c_a)\n");
    } else if (name == "dummy") {
        std::printf("dummy (a =");
        for (double x : a) std::printf(" %g", x);
        std::printf(")\n  constant matrix with every row equal to a; the N-dependent\n");
        std::printf("  correction reproduces the exact block proportions.\n");
        std::printf("  closed forms: c_f = c_a = c_q = 1\n");
    } else {
        throw ConfigError("unknown scenario: " + name);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"structured Wright-Fisher coalescent in stationary random environments"};
    app.require_subcommand(1);

    EpsOpts eps;
    auto* eps_cmd = app.add_subcommand("eps", "estimate c_f / c_a / c_q from stationary moments");
    add_common(eps_cmd, eps.common, true);
    eps_cmd->add_option("--reps", eps.reps, "independent stationary-vector replicates");
    eps_cmd->add_option("--tol", eps.tol, "certificate tolerance");
    eps_cmd->add_option("--max-steps", eps.max_steps, "backward product step limit");
    eps_cmd->add_option("--path-length", eps.path_length,
                        "also run the single-path ergodic estimator");

    SimulateOpts sim;
    auto* sim_cmd = app.add_subcommand("simulate", "Monte Carlo coalescence times");
    add_common(sim_cmd, sim.common, true);
    sim_cmd->add_option("--reps", sim.reps, "replicates");
    sim_cmd->add_option("--n", sim.n, "sample size (2 = pairwise)");
    sim_cmd->add_option("--policy", sim.policy, "stationary | uniform | fixed");
    sim_cmd->add_option("--islands", sim.fixed_islands, "0-based islands for --policy fixed")
        ->delimiter(',');
    sim_cmd->add_option("--c-scale", sim.c_scale, "scale factor for KS diagnostics");

    MoehleOpts moe;
    auto* moe_cmd = app.add_subcommand("moehle", "configuration-chain limit error vs N");
    add_common(moe_cmd, moe.common, true);
    moe_cmd->add_option("--n", moe.n, "sample size (levels 1..n)");
    moe_cmd->add_option("--t", moe.t, "time horizon (chain runs [Nt] generations)");
    moe_cmd->add_option("--N-list", moe.n_list, "population sizes")->delimiter(',');
    moe_cmd->add_option("--seeds", moe.seeds,
                        "environment seeds per N (random-environment mode)");
    moe_cmd->add_option("--fixed-b1", moe.fixed_b1, "row-major constant migration matrix")
        ->delimiter(',');
    moe_cmd->add_option("--anchors", moe.anchors, "0-based anchor state per level")
        ->delimiter(',');
    moe_cmd->add_option("--warmup", moe.warmup, "stationary warmup generations");
    moe_cmd->add_flag("--dump-matrices", moe.dump_matrices,
                      "export B, C, P and each Pi(N) as CSV with the state order");

    ErgodicsOpts erg;
    auto* erg_cmd = app.add_subcommand("ergodics", "product recursions and certificates");
    add_common(erg_cmd, erg.common, false);
    erg_cmd->add_option("--u", erg.u, "recursion depth");
    erg_cmd->add_option("--reps", erg.reps, "seeds for the uniformity check");
    erg_cmd->add_option("--osc-steps", erg.osc_steps, "backward steps for the certificate trace");

    std::string scen_action = "list", scen_name;
    std::vector<double> scen_a;
    auto* scen_cmd = app.add_subcommand("scenario", "list or show canned environments");
    scen_cmd->add_option("action", scen_action, "list | show");
    scen_cmd->add_option("name", scen_name, "scenario name (for show)");
    scen_cmd->add_option("--a", scen_a, "island proportions for closed forms")->delimiter(',');

    try {
        app.parse(argc, argv);
        if (*eps_cmd) return cmd_eps(eps);
        if (*sim_cmd) return cmd_simulate(sim);
        if (*moe_cmd) return cmd_moehle(moe);
        if (*erg_cmd) return cmd_ergodics(erg);
        if (*scen_cmd) return cmd_scenario(scen_action, scen_name, scen_a);
        return 2;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const coaleps::GuardError& e) {
        std::cerr << "guard violation: " << e.what() << "\n";
        return 4;
    } catch (const coaleps::ConvergenceError& e) {
        std::cerr << "non-convergence: " << e.what() << "\n";
        return 3;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
