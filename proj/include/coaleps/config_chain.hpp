#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "coaleps/matrix.hpp"
#include "coaleps/model.hpp"

namespace coaleps {

// ── Configuration state space ───────────────────────────────────────────────

/// All compositions of r into L nonnegative parts, in descending
/// lexicographic order. For L=2 this is (r,0),(r-1,1),...,(0,r).
std::vector<std::vector<int>> enumerate_states(int L, int r);

/// Levels r = 1..n of island-count configurations for n sampled lineages,
/// stacked into one index space of dimension sum_r binom(r+L-1, r).
/// Construction rejects stacked dimensions above 5000 (GuardError): this is
/// desk-scale dense linear algebra on purpose.
class ConfigStateSpace {
public:
    ConfigStateSpace(int L, int n);

    int L() const { return L_; }
    int n() const { return n_; }
    int total_dim() const { return total_dim_; }
    int level_dim(int r) const { return static_cast<int>(levels_[idx(r)].size()); }
    int offset(int r) const { return offsets_[idx(r)]; }
    const std::vector<std::vector<int>>& level(int r) const { return levels_[idx(r)]; }

    /// Stacked index of a state at level r.
    int index_of(int r, const std::vector<int>& state) const;

    /// One state index per level (0-based within the level), used to pick the
    /// representative rows when collapsing. Defaults to the first state.
    std::vector<int> default_anchors() const { return std::vector<int>(static_cast<std::size_t>(n_), 0); }

private:
    static std::size_t check_level(int r);
    std::size_t idx(int r) const { return static_cast<std::size_t>(r - 1); }

    int L_ = 0, n_ = 0, total_dim_ = 0;
    std::vector<std::vector<std::vector<int>>> levels_;
    std::vector<int> offsets_;
    std::vector<std::map<std::vector<int>, int>> lookup_;
};

// ── Building blocks ─────────────────────────────────────────────────────────

/// sum_k binom(x_k, 2) / a_k, the total pair-coalescence rate of configuration x.
double coalescence_functional(const std::vector<int>& x, const std::vector<double>& a);

/// Coalescence-rate matrix over the stacked space: diagonal blocks
/// -diag(C(x)), subdiagonal blocks with binom(x_k,2)/a_k at (x, x - e_k).
/// Every row sums to zero exactly.
Matrix build_C(const ConfigStateSpace& space, const std::vector<double>& a);

/// Transition matrix of r lineages migrating independently per b1, over the
/// level-r states: entry (x, y) sums over integer flow matrices with row
/// sums x and column sums y.
Matrix lift_migration(const StochasticMatrix& b1, int r);

/// Block-diagonal pure-migration matrix diag(B_1, ..., B_n).
Matrix build_B(const ConfigStateSpace& space, const StochasticMatrix& b1);

/// Multinomial law of r independent gamma-distributed lineages, over the
/// level-r states.
std::vector<double> multinomial_weights(const std::vector<double>& gamma, int r);

/// Block-diagonal matrix whose level-r block has d_r identical rows equal to
/// multinomial_weights(gamma, r).
Matrix build_P(const ConfigStateSpace& space, const std::vector<double>& gamma);

/// Star product G*P: block (i, j) is g_ij times d_i copies of P's level-j row.
/// P must be block-diagonal with constant rows per block.
Matrix star_product(const Matrix& g, const Matrix& p, const ConfigStateSpace& space);

/// Collapse an (stacked x stacked) matrix to n x n by summing row
/// (anchor state of level i) over the columns of each level j. Satisfies
/// collapse(G*P) = G for every anchor choice.
Matrix collapse(const Matrix& r, const ConfigStateSpace& space, const std::vector<int>& anchors);

/// Pure-death rate matrix of the n-lineage count process:
/// q_{ii} = -binom(i,2), q_{i,i-1} = binom(i,2) (levels 1..n).
Matrix build_Q(int n);

/// exp(t*M) by scaling and squaring of a truncated series, with a running
/// error bound in the max-row-sum norm. Throws ConvergenceError if the bound
/// cannot be brought below tol.
Matrix mat_exp(const Matrix& m, double t, double tol = 1e-12);

/// One-generation transition matrix of the n-lineage configuration chain:
/// Pi = B(N) (I + C/N), exactly stochastic. Requires N > max_x C(x)
/// (error names the offending value otherwise).
Matrix transition_matrix(const StochasticMatrix& b1n, const ConfigStateSpace& space,
                         const std::vector<double>& a, long long N);

// ── Limit checks ────────────────────────────────────────────────────────────

struct FixedEnvLimitResult {
    double norm = 0.0;      // ||collapse(Pi^[Nt]) - exp(c_f t Q)||
    Matrix collapsed;       // collapse(Pi^[Nt], anchors)
    Matrix reference;       // exp(c_f t Q)
    double c_f = 0.0;
    std::vector<double> gamma;
};

/// Constant-environment convergence check: how far the collapsed [Nt]-step
/// configuration chain is from the time-changed pure-death semigroup.
FixedEnvLimitResult fixed_env_limit_check(const StochasticMatrix& b1,
                                          const IslandStructure& structure, int n,
                                          long long N, double t,
                                          const std::vector<int>& anchors);

struct RandomEnvLimitResult {
    double norm = 0.0;   // ||collapse(Pi^(1)...Pi^([Nt])) - exp(c_hat t Q)||
    double c_hat = 0.0;  // path average of c^(j) over the [Nt] generations
    double warmup_oscillation = 0.0;
};

/// One random-environment path: builds the ordered product of per-generation
/// transition matrices over [Nt] generations (after `warmup` generations that
/// pin the stationary vector), evolves gamma along the same path, and
/// compares the collapsed product against exp(c_hat t Q).
/// Throws ConvergenceError if the warmup certificate exceeds 1e-6.
RandomEnvLimitResult random_env_limit_check(const EnvironmentSpec& spec,
                                            const IslandStructure& structure, int n,
                                            long long N, double t, std::uint64_t seed,
                                            int warmup = 1000);

}  // namespace coaleps
