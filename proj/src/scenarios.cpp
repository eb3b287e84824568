#include "coaleps/scenarios.hpp"

#include <cmath>

#include "coaleps/errors.hpp"
#include "coaleps/rng.hpp"

namespace coaleps {

EnvironmentSpec two_island_coin() {
    Matrix b1(2, 2), b2(2, 2);
    b1(0, 0) = 0.5; b1(0, 1) = 0.5;
    b1(1, 0) = 0.0; b1(1, 1) = 1.0;
    b2(0, 0) = 1.0; b2(0, 1) = 0.0;
    b2(1, 0) = 0.5; b2(1, 1) = 0.5;
    EnvironmentSpec spec;
    spec.K = 2;
    spec.kind = DriverKind::IIDWeights;
    spec.weights = {0.5, 0.5};
    spec.matrices.emplace_back(std::move(b1));
    spec.matrices.emplace_back(std::move(b2));
    return spec;
}

EnvironmentSpec favored_island(int L) {
    if (L < 2) throw ConfigError("favored_island needs at least two islands");
    EnvironmentSpec spec;
    spec.K = L;
    spec.kind = DriverKind::IIDWeights;
    spec.weights.assign(static_cast<std::size_t>(L), 1.0 / static_cast<double>(L));
    for (int k = 0; k < L; ++k) {
        Matrix m(static_cast<std::size_t>(L), static_cast<std::size_t>(L));
        for (int i = 0; i < L; ++i) m(static_cast<std::size_t>(i), static_cast<std::size_t>(k)) = 1.0;
        spec.matrices.emplace_back(std::move(m));
    }
    return spec;
}

EnvironmentSpec dummy_island(const IslandStructure& structure) {
    const int L = structure.L;
    Matrix b(static_cast<std::size_t>(L), static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j)
            b(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = structure.a[static_cast<std::size_t>(j)];

    // D(N) = N * (exact block proportion - a); rows sum to 0 because block
    // lengths sum to N. Entries are bounded by the floor deviation, uniformly
    // in N.
    const auto blocks = island_blocks(structure);
    Matrix d(static_cast<std::size_t>(L), static_cast<std::size_t>(L));
    double bound = 0.0;
    for (int i = 0; i < L; ++i)
        for (int j = 0; j < L; ++j) {
            const double exact = static_cast<double>(blocks[static_cast<std::size_t>(j)].size()) /
                                 static_cast<double>(structure.N);
            const double dij = static_cast<double>(structure.N) * (exact - structure.a[static_cast<std::size_t>(j)]);
            d(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = dij;
            bound = std::max(bound, std::abs(dij));
        }

    EnvironmentSpec spec;
    spec.K = 1;
    spec.kind = DriverKind::Constant;
    spec.matrices.emplace_back(std::move(b));
    spec.perturbations.push_back(std::move(d));
    spec.perturbation_bound = bound;
    return spec;
}

namespace {

double harmonic_sum(const std::vector<double>& a) {
    double s = 0.0;
    for (double ak : a) s += 1.0 / ak;
    return s;
}

}  // namespace

ScenarioDescriptor describe_two_island_coin(const std::vector<double>& a) {
    ScenarioDescriptor d;
    d.name = "two-island-coin";
    d.L = 2;
    d.a = a;
    d.closed_form_c_a = 0.25 * harmonic_sum(a);
    d.closed_form_c_q = harmonic_sum(a) / 3.0;
    return d;
}

ScenarioDescriptor describe_favored_island(int L, const std::vector<double>& a) {
    ScenarioDescriptor d;
    d.name = "favored-island";
    d.L = L;
    d.a = a;
    d.closed_form_c_q = harmonic_sum(a) / static_cast<double>(L);
    return d;
}

ScenarioDescriptor describe_dummy_island(const std::vector<double>& a) {
    ScenarioDescriptor d;
    d.name = "dummy";
    d.L = static_cast<int>(a.size());
    d.a = a;
    d.closed_form_c_a = 1.0;
    d.closed_form_c_q = 1.0;
    return d;
}

// ── Z recursions ────────────────────────────────────────────────────────────

namespace {

// eps = 1/2 appends the matrix that keeps mass on island 1; eps = 0 appends
// the one that halves it. Right-multiplying M(eps) sends Z to Z/2 + eps;
// left-multiplying M(1/2 - eps) sends Z* to Z* - 2^-u * eps.
Matrix coin_matrix(double eps) {
    Matrix m(2, 2);
    if (eps > 0.0) {
        m(0, 0) = 1.0; m(0, 1) = 0.0;
        m(1, 0) = 0.5; m(1, 1) = 0.5;
    } else {
        m(0, 0) = 0.5; m(0, 1) = 0.5;
        m(1, 0) = 0.0; m(1, 1) = 1.0;
    }
    return m;
}

Matrix z_form(double z, double step) {
    Matrix m(2, 2);
    m(0, 0) = z;        m(0, 1) = 1.0 - z;
    m(1, 0) = z - step; m(1, 1) = 1.0 - z + step;
    return m;
}

}  // namespace

ZRecursionResult z_recursions(std::uint64_t seed, int u, std::uint64_t stream_index) {
    if (u < 1) throw ConfigError("z_recursions needs u >= 1");
    Philox rng(seed, stream_id(StreamPurpose::Generic, stream_index));

    std::vector<double> eps(static_cast<std::size_t>(u));
    for (double& e : eps) e = (rng.next_u64() & 1ull) ? 0.5 : 0.0;
    return z_recursions_from(eps);
}

ZRecursionResult z_recursions_from(const std::vector<double>& eps) {
    const int u = static_cast<int>(eps.size());
    if (u < 1) throw ConfigError("z_recursions needs u >= 1");
    for (double e : eps)
        if (e != 0.0 && e != 0.5) throw ConfigError("eps entries must be 0 or 1/2");

    ZRecursionResult r;
    r.z.assign(static_cast<std::size_t>(u) + 1, 0.0);
    r.z_star.assign(static_cast<std::size_t>(u) + 1, 0.0);
    r.z[0] = 1.0;
    r.z_star[0] = 1.0;
    for (int j = 0; j < u; ++j) {
        r.z[static_cast<std::size_t>(j) + 1] = 0.5 * r.z[static_cast<std::size_t>(j)] + eps[static_cast<std::size_t>(j)];
        r.z_star[static_cast<std::size_t>(j) + 1] =
            r.z_star[static_cast<std::size_t>(j)] - std::ldexp(eps[static_cast<std::size_t>(j)], -j);
    }

    r.forward_product = Matrix::identity(2);
    for (int j = 0; j < u; ++j) r.forward_product = r.forward_product * coin_matrix(eps[static_cast<std::size_t>(j)]);

    r.backward_product = Matrix::identity(2);
    for (int j = 0; j < u; ++j)
        r.backward_product = coin_matrix(0.5 - eps[static_cast<std::size_t>(j)]) * r.backward_product;

    const double step = std::ldexp(1.0, -u);
    r.forward_residual = max_abs_diff(r.forward_product, z_form(r.z.back(), step));
    r.backward_residual = max_abs_diff(r.backward_product, z_form(r.z_star.back(), step));
    return r;
}

}  // namespace coaleps
