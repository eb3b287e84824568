// Acceptance suite: one line per criterion, exit code = number of failures.
//
// Each criterion pins a closed-form target, an independent oracle, or an
// exact algebraic identity, at the tolerance stated next to it. Runs in a
// few minutes on two cores (`acceptance --workers W` to use more).

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "coaleps/ancestry.hpp"
#include "coaleps/config_chain.hpp"
#include "coaleps/ergodics.hpp"
#include "coaleps/model.hpp"
#include "coaleps/parallel.hpp"
#include "coaleps/rng.hpp"
#include "coaleps/scenarios.hpp"
#include "coaleps/stats.hpp"

using namespace coaleps;

namespace {

int g_workers = 2;
int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail) {
    std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), pattern, a, b, c);
    return buf;
}

std::vector<double> random_simplex(Philox& rng, int L) {
    std::vector<double> v(static_cast<std::size_t>(L));
    double sum = 0.0;
    for (double& x : v) {
        x = 0.1 + rng.next_double();
        sum += x;
    }
    double acc = 0.0;
    for (int i = 0; i + 1 < L; ++i) {
        v[static_cast<std::size_t>(i)] /= sum;
        acc += v[static_cast<std::size_t>(i)];
    }
    v[static_cast<std::size_t>(L - 1)] = 1.0 - acc;
    return v;
}

EnvironmentSpec random_iid_env(Philox& rng, int L, int K) {
    EnvironmentSpec spec;
    spec.K = K;
    spec.kind = DriverKind::IIDWeights;
    spec.weights = random_simplex(rng, K);
    for (int k = 0; k < K; ++k) {
        Matrix m(static_cast<std::size_t>(L), static_cast<std::size_t>(L));
        for (int i = 0; i < L; ++i) {
            auto row = random_simplex(rng, L);
            for (int j = 0; j < L; ++j)
                m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                    row[static_cast<std::size_t>(j)];
        }
        spec.matrices.emplace_back(std::move(m));
    }
    return spec;
}

// 1. two-island coin, a=(1/2,1/2), N=2000, 1e5 pairwise replicates:
//    mean T2 = 1500 within 2% (c_q = 4/3).
void criterion_1() {
    IslandStructure s = islands({0.5, 0.5}, 2000);
    auto summary = simulate_T2(two_island_coin(), s, 101, 100000,
                               SamplingPolicy::stationary(), g_workers);
    const double target = 1500.0;
    const bool pass = std::abs(summary.mean_t2 - target) <= 0.02 * target &&
                      summary.capped == 0;
    report(1, pass,
           fmt("coin N=2000: mean T2 = %.2f vs 1500 +- 2%% (se %.2f)", summary.mean_t2,
               summary.se_t2));
}

// 2. favored-island: L=2 N=2000 -> 1000 +- 2%; L=3 equal islands N=3000 -> 1000 +- 2%.
void criterion_2() {
    IslandStructure s2 = islands({0.5, 0.5}, 2000);
    auto a2 = simulate_T2(favored_island(2), s2, 102, 100000,
                          SamplingPolicy::stationary(), g_workers);
    IslandStructure s3 = islands({1.0 / 3, 1.0 / 3, 1.0 / 3}, 3000);
    auto a3 = simulate_T2(favored_island(3), s3, 103, 100000,
                          SamplingPolicy::stationary(), g_workers);
    const bool ok2 = std::abs(a2.mean_t2 - 1000.0) <= 20.0 && a2.capped == 0;
    const bool ok3 = std::abs(a3.mean_t2 - 1000.0) <= 20.0 && a3.capped == 0;
    report(2, ok2 && ok3,
           fmt("favored L=2: %.2f, L=3: %.2f, both vs 1000 +- 2%%", a2.mean_t2, a3.mean_t2));
}

// 3. dummy island N=1000: mean T2 = 1000 +- 2% and c_f = c_a = c_q = 1 +- 1e-10.
void criterion_3() {
    IslandStructure s = islands({0.5, 0.5}, 1000);
    EnvironmentSpec dummy = dummy_island(s);
    auto sim = simulate_T2(dummy, s, 104, 100000, SamplingPolicy::stationary(), g_workers);
    auto eps = estimate_eps(dummy, s, 104, 200);
    const bool sim_ok = std::abs(sim.mean_t2 - 1000.0) <= 20.0 && sim.capped == 0;
    const bool eps_ok = eps.c_f.has_value() && std::abs(*eps.c_f - 1.0) <= 1e-10 &&
                        std::abs(eps.c_a - 1.0) <= 1e-10 && std::abs(eps.c_q - 1.0) <= 1e-10;
    report(3, sim_ok && eps_ok,
           fmt("dummy: mean T2 = %.2f vs 1000 +- 2%%; |c-1| <= %.1e", sim.mean_t2,
               std::max({std::abs(*eps.c_f - 1.0), std::abs(eps.c_a - 1.0),
                         std::abs(eps.c_q - 1.0)})));
}

// 4. coin moments: E(gamma^2) = 1/3 +- 3 SE, Var = 1/12 +- 3 SE per island;
//    gap identity to 1e-10 and gap ~ 1/3.
void criterion_4() {
    IslandStructure s = islands({0.5, 0.5}, 2000);
    auto r = estimate_eps(two_island_coin(), s, 105, 20000, kBackwardTolDefault,
                          kBackwardMaxStepsDefault, g_workers);
    bool moments_ok = true;
    for (int k = 0; k < 2; ++k) {
        moments_ok = moments_ok &&
                     std::abs(r.gamma_second_moment[k] - 1.0 / 3) <=
                         3.0 * r.se_gamma_second_moment[k] &&
                     std::abs(r.gamma_variance[k] - 1.0 / 12) <= 3.0 * r.se_gamma_variance[k];
    }
    double weighted_var = 0.0;
    for (int k = 0; k < 2; ++k) weighted_var += r.gamma_variance[k] / s.a[k];
    const bool identity_ok = std::abs(r.gap - weighted_var) <= 1e-10;
    const bool gap_ok = std::abs(r.gap - 1.0 / 3) <= 3.0 * r.se_gap;
    report(4, moments_ok && identity_ok && gap_ok,
           fmt("coin moments: E(g^2)=%.5f, Var=%.5f, gap=%.5f", r.gamma_second_moment[0],
               r.gamma_variance[0], r.gap) +
               fmt("; |gap - sum Var/a| = %.1e <= 1e-10", std::abs(r.gap - weighted_var)));
}

// 5. replicate-average and single-path c_q estimators agree within 3 combined
//    SEs on both scenarios (2e4 replicates / 1e5 path length).
void criterion_5() {
    IslandStructure s = islands({0.5, 0.5}, 2000);
    auto coin_rep = estimate_eps(two_island_coin(), s, 106, 20000, kBackwardTolDefault,
                                 kBackwardMaxStepsDefault, g_workers);
    auto coin_path = ergodic_average_cq(two_island_coin(), s, 106, 100000);
    const double coin_comb =
        std::sqrt(coin_rep.se_c_q * coin_rep.se_c_q + coin_path.se * coin_path.se);
    const bool coin_ok = std::abs(coin_rep.c_q - coin_path.value) <= 3.0 * coin_comb;

    auto fav_rep = estimate_eps(favored_island(2), s, 107, 20000, kBackwardTolDefault,
                                kBackwardMaxStepsDefault, g_workers);
    auto fav_path = ergodic_average_cq(favored_island(2), s, 107, 100000);
    const double fav_comb =
        std::sqrt(fav_rep.se_c_q * fav_rep.se_c_q + fav_path.se * fav_path.se) + 1e-12;
    const bool fav_ok = std::abs(fav_rep.c_q - fav_path.value) <= 3.0 * fav_comb;

    report(5, coin_ok && fav_ok,
           fmt("coin: %.5f vs %.5f; ", coin_rep.c_q, coin_path.value) +
               fmt("favored: %.5f vs %.5f (3 combined SEs)", fav_rep.c_q, fav_path.value));
}

// 6. fixed-environment limit: norm ratios in [1.4, 2.6] as N doubles, plus the
//    exact star/collapse identities at 1e-12 for n <= 4, L <= 3.
void criterion_6() {
    IslandStructure s = islands({0.5, 0.5}, 100);
    Matrix symm(2, 2);
    symm(0, 0) = 0.75; symm(0, 1) = 0.25;
    symm(1, 0) = 0.25; symm(1, 1) = 0.75;
    StochasticMatrix b1(std::move(symm));
    ConfigStateSpace space3(2, 3);

    std::vector<double> norms;
    for (long long N : {100LL, 200LL, 400LL, 800LL})
        norms.push_back(
            fixed_env_limit_check(b1, s, 3, N, 1.0, space3.default_anchors()).norm);
    bool ratios_ok = true;
    for (std::size_t i = 0; i + 1 < norms.size(); ++i) {
        const double ratio = norms[i] / norms[i + 1];
        ratios_ok = ratios_ok && ratio >= 1.4 && ratio <= 2.6 && norms[i + 1] < norms[i];
    }

    Philox rng(606, 0);
    double worst = 0.0;
    for (int L = 2; L <= 3; ++L)
        for (int n = 2; n <= 4; ++n) {
            ConfigStateSpace space(L, n);
            auto gamma = random_simplex(rng, L);
            auto a = random_simplex(rng, L);
            Matrix p = build_P(space, gamma);
            Matrix q = build_Q(n);

            Matrix g(static_cast<std::size_t>(n), static_cast<std::size_t>(n));
            for (std::size_t i = 0; i < g.rows(); ++i)
                for (std::size_t j = 0; j < g.cols(); ++j) g(i, j) = rng.next_double() * 2.0 - 1.0;
            Matrix gp = star_product(g, p, space);
            std::vector<int> anchors(static_cast<std::size_t>(n));
            for (int r = 1; r <= n; ++r)
                anchors[static_cast<std::size_t>(r - 1)] =
                    static_cast<int>(rng.below(static_cast<std::uint64_t>(space.level_dim(r))));
            worst = std::max(worst, max_abs_diff(collapse(gp, space, anchors), g));

            Matrix qp = star_product(q, p, space);
            worst = std::max(worst, max_abs_diff(qp * qp, star_product(q * q, p, space)));
            worst = std::max(worst,
                             max_abs_diff(qp * qp * qp, star_product(q * q * q, p, space)));

            Matrix c = build_C(space, a);
            Matrix rhs = star_product(q, p, space);
            rhs *= c_f_factor(a, gamma);
            worst = std::max(worst, max_abs_diff(p * c * p, rhs));
        }
    const bool identities_ok = worst <= 1e-12;
    report(6, ratios_ok && identities_ok,
           fmt("norm ratios %.2f/%.2f/%.2f in [1.4,2.6]", norms[0] / norms[1],
               norms[1] / norms[2], norms[2] / norms[3]) +
               fmt("; identity residual %.1e <= 1e-12", worst));
}

// 7. random-environment limit (coin, n=2, t=1): median norm over 20 seeds
//    strictly decreasing along N in {100,200,400,800}; path c_hat within 2%
//    of 4/3 at path length 1e5.
void criterion_7() {
    IslandStructure s = islands({0.5, 0.5}, 100);
    EnvironmentSpec coin = two_island_coin();
    std::vector<double> medians;
    for (long long N : {100LL, 200LL, 400LL, 800LL}) {
        std::vector<double> norms(20);
        parallel_for(norms.size(), g_workers, [&](std::size_t seed) {
            norms[seed] = random_env_limit_check(coin, s, 2, N, 1.0, 700 + seed).norm;
        });
        medians.push_back(median(norms));
    }
    bool decreasing = true;
    for (std::size_t i = 0; i + 1 < medians.size(); ++i)
        decreasing = decreasing && medians[i + 1] < medians[i];

    auto long_path = random_env_limit_check(coin, s, 2, 100000, 1.0, 701);
    const bool chat_ok = std::abs(long_path.c_hat - 4.0 / 3) <= 0.02 * (4.0 / 3);
    report(7, decreasing && chat_ok,
           fmt("medians %.1e > %.1e > ", medians[0], medians[1]) +
               fmt("%.1e > %.1e; ", medians[2], medians[3]) +
               fmt("c_hat(1e5) = %.5f vs 4/3 +- 2%%", long_path.c_hat));
}

// 8. 1e4 samples of Z_30 pass KS vs U(0,1) at 1% (< 0.0163); Z* increments
//    obey |Z*_{u+1} - Z*_u| <= 2^-(u+1) exactly; both product
//    representations match direct multiplication to 1e-12.
void criterion_8() {
    const int reps = 10000, u = 30;
    std::vector<double> zs;
    zs.reserve(reps);
    double worst_residual = 0.0;
    bool cauchy_ok = true;
    for (int i = 0; i < reps; ++i) {
        auto r = z_recursions(108, u, static_cast<std::uint64_t>(i));
        zs.push_back(r.z.back());
        worst_residual = std::max({worst_residual, r.forward_residual, r.backward_residual});
        for (std::size_t j = 0; j + 1 < r.z_star.size(); ++j)
            if (std::abs(r.z_star[j + 1] - r.z_star[j]) >
                std::ldexp(1.0, -static_cast<int>(j) - 1))
                cauchy_ok = false;
    }
    const double ks = ks_uniform(zs);
    report(8, ks < 0.0163 && cauchy_ok && worst_residual <= 1e-12,
           fmt("KS(Z_30) = %.5f < 0.0163; residual %.1e <= 1e-12; ", ks, worst_residual) +
               std::string(cauchy_ok ? "Z* Cauchy bound exact" : "Z* Cauchy bound VIOLATED"));
}

// 9. property suites: Jensen on 1e3 random environments; oscillation
//    monotonicity on every backward product; lift_migration vs the L^r
//    labeled-path oracle (r <= 3, L <= 3) at 1e-12; single-island survival
//    matches (1-1/N)^t within 3 sigma.
void criterion_9() {
    // Jensen
    Philox rng(909, 0);
    bool jensen_ok = true;
    std::vector<int> failures(1000, 0);
    std::vector<EnvironmentSpec> envs;
    std::vector<IslandStructure> structs;
    envs.reserve(1000);
    structs.reserve(1000);
    for (int trial = 0; trial < 1000; ++trial) {
        const int L = 2 + static_cast<int>(rng.below(3));
        const int K = 1 + static_cast<int>(rng.below(3));
        envs.push_back(random_iid_env(rng, L, K));
        structs.push_back(islands(random_simplex(rng, L), 1000));
    }
    parallel_for(envs.size(), g_workers, [&](std::size_t trial) {
        auto r = estimate_eps(envs[trial], structs[trial], 2000 + trial, 20);
        if (!(r.c_a >= 1.0 - 1e-10)) failures[trial] = 1;
    });
    for (int f : failures) jensen_ok = jensen_ok && f == 0;

    // oscillation monotonicity, certified-interval semantics
    bool osc_ok = true;
    for (int trial = 0; trial < 50; ++trial) {
        const int L = 2 + static_cast<int>(rng.below(2));
        EnvironmentSpec env = random_iid_env(rng, L, 2);
        EnvironmentStream stream(env, 3000 + static_cast<std::uint64_t>(trial), 0,
                                 EnvironmentStream::Direction::Backward);
        Matrix r = Matrix::identity(static_cast<std::size_t>(L));
        std::vector<double> alpha(static_cast<std::size_t>(L), 0.0);
        std::vector<double> beta(static_cast<std::size_t>(L), 1.0);
        double prev = 1.0;
        for (int step = 0; step < 80; ++step) {
            r = env.matrices[static_cast<std::size_t>(stream.next())].matrix() * r;
            for (std::size_t k = 0; k < static_cast<std::size_t>(L); ++k) {
                double lo = r(0, k), hi = r(0, k);
                for (std::size_t i = 1; i < static_cast<std::size_t>(L); ++i) {
                    lo = std::min(lo, r(i, k));
                    hi = std::max(hi, r(i, k));
                }
                alpha[k] = std::max(alpha[k], lo);
                beta[k] = std::min(beta[k], hi);
            }
            double osc = 0.0;
            for (std::size_t k = 0; k < static_cast<std::size_t>(L); ++k)
                osc = std::max(osc, beta[k] - alpha[k]);
            osc = std::max(osc, 0.0);
            if (osc > prev) osc_ok = false;
            prev = osc;
        }
    }

    // lift_migration against the labeled-path oracle
    double lift_worst = 0.0;
    for (int L = 1; L <= 3; ++L)
        for (int r = 1; r <= 3; ++r)
            for (int trial = 0; trial < 3; ++trial) {
                Matrix m(static_cast<std::size_t>(L), static_cast<std::size_t>(L));
                for (int i = 0; i < L; ++i) {
                    auto row = random_simplex(rng, L);
                    for (int j = 0; j < L; ++j)
                        m(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                            row[static_cast<std::size_t>(j)];
                }
                StochasticMatrix b1(std::move(m));
                Matrix fast = lift_migration(b1, r);

                const auto states = enumerate_states(L, r);
                long long tuples = 1;
                for (int i = 0; i < r; ++i) tuples *= L;
                Matrix slow(states.size(), states.size());
                for (std::size_t xi = 0; xi < states.size(); ++xi) {
                    std::vector<int> origin;
                    for (int k = 0; k < L; ++k)
                        origin.insert(origin.end(),
                                      static_cast<std::size_t>(states[xi][static_cast<std::size_t>(k)]), k);
                    for (long long code = 0; code < tuples; ++code) {
                        long long cc = code;
                        double prob = 1.0;
                        std::vector<int> dest(static_cast<std::size_t>(L), 0);
                        for (int i = 0; i < r; ++i) {
                            const int to = static_cast<int>(cc % L);
                            cc /= L;
                            prob *= b1(static_cast<std::size_t>(origin[static_cast<std::size_t>(i)]),
                                       static_cast<std::size_t>(to));
                            dest[static_cast<std::size_t>(to)] += 1;
                        }
                        std::size_t yi = 0;
                        while (states[yi] != dest) ++yi;
                        slow(xi, yi) += prob;
                    }
                }
                lift_worst = std::max(lift_worst, max_abs_diff(fast, slow));
            }
    const bool lift_ok = lift_worst <= 1e-12;

    // single-island survival: P(T2 > N) = (1 - 1/N)^N
    EnvironmentSpec single;
    single.K = 1;
    single.kind = DriverKind::Constant;
    single.matrices.emplace_back(Matrix::identity(1));
    IslandStructure s1 = islands({1.0}, 100);
    CoalescenceSample sample;
    simulate_T2(single, s1, 110, 100000, SamplingPolicy::uniform_individuals(), g_workers,
                &sample);
    const double p = std::pow(1.0 - 1.0 / 100.0, 100);
    long survived = 0;
    for (double t : sample.t2)
        if (t > 100.0) ++survived;
    const double freq = static_cast<double>(survived) / static_cast<double>(sample.t2.size());
    const double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(sample.t2.size()));
    const bool survival_ok = std::abs(freq - p) <= 3.0 * sigma;

    report(9, jensen_ok && osc_ok && lift_ok && survival_ok,
           std::string("Jensen ") + (jensen_ok ? "ok" : "FAIL") + ", oscillation " +
               (osc_ok ? "monotone" : "FAIL") + fmt(", lift residual %.1e", lift_worst) +
               fmt(", survival %.4f vs %.4f +- 3 sigma", freq, p));
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--workers") == 0 && i + 1 < argc) g_workers = std::atoi(argv[++i]);
        if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc) only = std::atoi(argv[++i]);
    }
    using Fn = void (*)();
    const Fn criteria[] = {criterion_1, criterion_2, criterion_3, criterion_4, criterion_5,
                           criterion_6, criterion_7, criterion_8, criterion_9};
    for (int i = 0; i < 9; ++i) {
        if (only != 0 && only != i + 1) continue;
        try {
            criteria[i]();
        } catch (const std::exception& e) {
            report(i + 1, false, std::string("exception: ") + e.what());
        }
    }
    if (g_failures == 0)
        std::printf("acceptance: all criteria passed\n");
    else
        std::printf("acceptance: %d criterion(s) FAILED\n", g_failures);
    return g_failures;
}
