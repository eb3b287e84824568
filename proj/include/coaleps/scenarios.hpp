#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "coaleps/matrix.hpp"
#include "coaleps/model.hpp"

namespace coaleps {

// Canned environments used throughout the test and CLI surfaces. Constructors
// return plain EnvironmentSpec values, so downstream code treats them exactly
// like user-supplied configs.

struct ScenarioDescriptor {
    std::string name;
    int L = 0;
    std::vector<double> a;
    std::optional<double> closed_form_c_a;
    std::optional<double> closed_form_c_q;
};

/// Two islands; each generation a fair coin picks the favored island, whose
/// offspring spill into the other island's range. IID over
///   [[1/2,1/2],[0,1]]  and  [[1,0],[1/2,1/2]]
/// with equal weights. Closed forms:
///   c_a = (1/4)(1/a_1 + 1/a_2),  c_q = (1/3)(1/a_1 + 1/a_2).
EnvironmentSpec two_island_coin();

/// L islands; each generation one island is chosen uniformly at random and
/// every lineage descends from it (state k's matrix has all rows equal to
/// e_k). Closed form: c_q = (1/L) * sum_k 1/a_k.
EnvironmentSpec favored_island(int L);

/// Constant environment whose matrix rows all equal a: the unstructured
/// population with islands painted on. The perturbation D(N) carries the
/// exact floor-block discrepancy N*(len_k/N - a_k), so B + D/N reproduces the
/// block proportions exactly. All effective-size factors equal 1.
EnvironmentSpec dummy_island(const IslandStructure& structure);

ScenarioDescriptor describe_two_island_coin(const std::vector<double>& a);
ScenarioDescriptor describe_favored_island(int L, const std::vector<double>& a);
ScenarioDescriptor describe_dummy_island(const std::vector<double>& a);

// ── Random-matrix product dichotomy ─────────────────────────────────────────
//
// For the coin environment the ordered products admit scalar representations:
// the forward product B^(1)...B^(u) equals
//   [[Z_u, 1-Z_u], [Z_u - 2^-u, 1-Z_u+2^-u]]
// with Z_{j+1} = Z_j/2 + eps_j (weak convergence only), while the
// reverse-order product equals the analogous matrix in Z*_u with
//   Z*_{j+1} = Z*_j - 2^-j eps_j,
// which is Cauchy pathwise and converges almost surely.

struct ZRecursionResult {
    std::vector<double> z;        // Z_0..Z_u
    std::vector<double> z_star;   // Z*_0..Z*_u
    Matrix forward_product;       // product of the matrices driving Z
    Matrix backward_product;      // reverse-ordered product driving Z*
    double forward_residual = 0.0;   // max |product - closed form|
    double backward_residual = 0.0;
};

/// Draw eps_0..eps_{u-1} iid from {0, 1/2}, run both recursions, multiply the
/// corresponding matrix sequences, and report the entrywise residuals against
/// the closed forms (expected ~0; they are dyadic-exact in double).
ZRecursionResult z_recursions(std::uint64_t seed, int u, std::uint64_t stream_index = 0);

/// Same, for a caller-supplied eps sequence (entries must be 0 or 1/2).
ZRecursionResult z_recursions_from(const std::vector<double>& eps);

}  // namespace coaleps
