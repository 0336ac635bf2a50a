#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "deepsn/gen.hpp"
#include "deepsn/graph.hpp"
#include "deepsn/tape.hpp"
#include "testutil.hpp"

using namespace deepsn;
using testutil::fd_gradients;
using testutil::max_rel_err;
using testutil::ParamMap;
using testutil::random_matrix;
using testutil::reverse_gradients;

namespace {

void check_builder(const ParamMap& params, const testutil::LossBuilder& build,
                   double tol = 1e-4) {
    const ParamMap ad = reverse_gradients(params, build);
    const ParamMap fd = fd_gradients(params, build);
    CHECK(max_rel_err(ad, fd) <= tol);
}

// Entries bounded away from zero so |x| kinks stay far from FD probes.
Matrix away_from_zero(int r, int c, std::uint64_t seed, double lo = 0.2, double hi = 1.2) {
    std::mt19937_64 rng = make_rng(seed, 0);
    std::uniform_real_distribution<double> mag(lo, hi);
    std::uniform_real_distribution<double> sign(0.0, 1.0);
    Matrix m(r, c);
    for (double& v : m.vec()) v = mag(rng) * (sign(rng) < 0.5 ? -1.0 : 1.0);
    return m;
}

} // namespace

TEST_CASE("quadratic-through-matmul gradient matches the hand formula") {
    // loss = ||W x||^2 at W = I has gradient 2 x x^T.
    Matrix x = random_matrix(4, 1, 42);
    ParamMap params;
    Matrix eye(4, 4);
    for (int i = 0; i < 4; ++i) eye(i, i) = 1.0;
    params.emplace("W", eye);
    auto build = [&](Tape& t, const ParamMap& p) {
        const int w = t.param("W", p.at("W"));
        const int xc = t.constant(x);
        return t.sum_sq(t.matmul(w, xc));
    };
    const ParamMap ad = reverse_gradients(params, build);
    const Matrix& gw = ad.at("W");
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
            CHECK(gw(r, c) == doctest::Approx(2.0 * x(r, 0) * x(c, 0)).epsilon(1e-12));
}

TEST_CASE("zero loss gives zero gradients") {
    ParamMap params;
    params.emplace("a", random_matrix(3, 2, 7));
    auto build = [](Tape& t, const ParamMap& p) {
        const int a = t.param("a", p.at("a"));
        return t.sum_sq(t.sub(a, a));
    };
    const ParamMap ad = reverse_gradients(params, build);
    for (double v : ad.at("a").vec()) CHECK(v == 0.0);
}

TEST_CASE("elementwise and affine primitives match finite differences") {
    ParamMap params;
    params.emplace("x", random_matrix(5, 3, 1));
    params.emplace("w", random_matrix(3, 4, 2));
    params.emplace("b", random_matrix(1, 4, 3));
    params.emplace("h", random_matrix(5, 4, 4));

    SUBCASE("affine+logistic+hadamard+sum") {
        check_builder(params, [](Tape& t, const ParamMap& p) {
            const int x = t.param("x", p.at("x"));
            const int w = t.param("w", p.at("w"));
            const int b = t.param("b", p.at("b"));
            const int h = t.param("h", p.at("h"));
            const int a = t.affine(x, w, b);
            return t.sum(t.hadamard(t.logistic(a), h));
        });
    }
    SUBCASE("softplus+scale+shift+sub") {
        check_builder(params, [](Tape& t, const ParamMap& p) {
            const int x = t.param("x", p.at("x"));
            const int w = t.param("w", p.at("w"));
            const int b = t.param("b", p.at("b"));
            const int h = t.param("h", p.at("h"));
            const int a = t.softplus(t.affine(x, w, b));
            return t.sum_sq(t.sub(t.shift(t.scale(a, 0.7), -0.3), h));
        });
    }
}

TEST_CASE("saturating reaction map gradients (x and kappa)") {
    ParamMap params;
    params.emplace("x", away_from_zero(6, 3, 11));
    Matrix kappa = random_matrix(6, 3, 12, 0.4);
    for (double& v : kappa.vec()) v = 1.0 + std::abs(v); // strictly positive
    params.emplace("k", kappa);
    check_builder(params, [](Tape& t, const ParamMap& p) {
        const int x = t.param("x", p.at("x"));
        const int k = t.param("k", p.at("k"));
        return t.sum_sq(t.saturate(x, k));
    });
}

TEST_CASE("block left-multiply, gather, concat, reshape") {
    const int n = 5, d = 2, f = 3;
    ParamMap params;
    params.emplace("w", random_matrix(d, d, 21));
    params.emplace("x", random_matrix(n * d, f, 22));
    check_builder(params, [&](Tape& t, const ParamMap& p) {
        const int w = t.param("w", p.at("w"));
        const int x = t.param("x", p.at("x"));
        const int y = t.block_left_mul(w, x);
        const int flat = t.reshape(y, n, d * f);
        const int g1 = t.gather_rows(flat, {0, 2, 4, 2});
        const int g2 = t.gather_rows(flat, {1, 1, 3, 0});
        return t.sum_sq(t.hconcat(g1, g2));
    });
}

TEST_CASE("signed neighbor aggregate gradients flow to features and activations") {
    const Graph g = random_connected_graph(7, 5, 31);
    const int d = 2, f = 2;
    ParamMap params;
    params.emplace("x", random_matrix(g.num_vertices() * d, f, 32));
    Matrix s = random_matrix(g.num_vertices(), 1, 33, 0.5);
    for (double& v : s.vec()) v = 0.5 + 0.4 * v; // inside (0,1)
    params.emplace("s", s);
    check_builder(params, [&](Tape& t, const ParamMap& p) {
        const int x = t.param("x", p.at("x"));
        const int sv = t.param("s", p.at("s"));
        return t.sum_sq(t.neighbor_signed_sum(x, sv, &g, d));
    });
}

TEST_CASE("soft top-k matches finite differences away from saturation") {
    ParamMap params;
    params.emplace("z", random_matrix(7, 1, 41, 2.0));
    std::vector<int> community{0, 0, 0, 0, 1, 1, 1};
    std::vector<double> budget{1.5, 2.0};
    check_builder(params, [&](Tape& t, const ParamMap& p) {
        const int z = t.param("z", p.at("z"));
        const int s = t.soft_topk(z, community, budget, 0.3);
        Matrix w(7, 1);
        for (int i = 0; i < 7; ++i) w(i, 0) = 0.2 * (i + 1);
        return t.sum(t.hadamard(s, t.constant(w)));
    });
}

TEST_CASE("soft top-k sums to the budget in each community") {
    Tape t;
    const int z = t.constant(random_matrix(9, 1, 43, 3.0));
    std::vector<int> community{0, 1, 0, 1, 0, 1, 0, 1, 0};
    std::vector<double> budget{2.0, 3.0};
    const int s = t.soft_topk(z, community, budget, 0.15);
    double sum0 = 0.0, sum1 = 0.0;
    for (int v = 0; v < 9; ++v) (community[v] == 0 ? sum0 : sum1) += t.value(s)(v, 0);
    CHECK(sum0 == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(sum1 == doctest::Approx(3.0).epsilon(1e-9));

    // saturated budgets pin outputs to the corners
    const int all = t.soft_topk(z, community, {5.0, 4.0}, 0.15);
    for (int v = 0; v < 9; ++v) CHECK(t.value(all)(v, 0) == 1.0);
    const int none = t.soft_topk(z, community, {0.0, 0.0}, 0.15);
    for (int v = 0; v < 9; ++v) CHECK(t.value(none)(v, 0) == 0.0);
}

namespace {

void sheaf_diffuse_case(int d, bool normalized, std::uint64_t seed) {
    const Graph g = random_connected_graph(6, 4, seed);
    const int m = g.num_edges();
    const int f = 2;
    ParamMap params;
    params.emplace("x", random_matrix(g.num_vertices() * d, f, seed + 1));
    params.emplace("flo", random_matrix(m * d, d, seed + 2));
    params.emplace("fhi", random_matrix(m * d, d, seed + 3));
    Matrix psi = random_matrix(m, 1, seed + 4, 0.3);
    for (double& v : psi.vec()) v = 0.6 + 0.5 * v; // in (0.45, 0.75)
    params.emplace("psi_raw", psi);
    check_builder(params, [&, d, normalized](Tape& t, const ParamMap& p) {
        const int x = t.param("x", p.at("x"));
        const int flo = t.param("flo", p.at("flo"));
        const int fhi = t.param("fhi", p.at("fhi"));
        // keep psi in (0,1) via logistic so the diffuse node sees valid input
        const int psi_n = t.logistic(t.param("psi_raw", p.at("psi_raw")));
        return t.sum_sq(t.sheaf_diffuse(x, flo, fhi, psi_n, &g, d, 0.5, normalized));
    });
}

} // namespace

TEST_CASE("sheaf diffusion gradients, raw operator") {
    sheaf_diffuse_case(1, false, 51);
    sheaf_diffuse_case(2, false, 53);
}

TEST_CASE("sheaf diffusion gradients, normalized operator") {
    sheaf_diffuse_case(1, true, 61);
    sheaf_diffuse_case(2, true, 63);
}

TEST_CASE("composite layer-like expression on 12 vertices") {
    const Graph g = random_connected_graph(12, 10, 71);
    const int d = 2, f = 3, m = g.num_edges(), n = g.num_vertices();
    ParamMap params;
    params.emplace("x", random_matrix(n * d, f, 72));
    params.emplace("w1", random_matrix(d, d, 73));
    params.emplace("w2", random_matrix(f, f, 74));
    params.emplace("flo", random_matrix(m * d, d, 75));
    params.emplace("fhi", random_matrix(m * d, d, 76));
    params.emplace("psi_raw", random_matrix(m, 1, 77));
    params.emplace("phi", random_matrix(n * d, f, 78));
    params.emplace("kraw", random_matrix(n * d, f, 79));
    params.emplace("s_raw", random_matrix(n, 1, 80));
    Matrix y = random_matrix(n, 1, 81, 0.5);
    for (double& v : y.vec()) v = 0.5 + v; // targets in (0,1)

    check_builder(params, [&](Tape& t, const ParamMap& p) {
        const int x = t.param("x", p.at("x"));
        const int w1 = t.param("w1", p.at("w1"));
        const int w2 = t.param("w2", p.at("w2"));
        const int flo = t.param("flo", p.at("flo"));
        const int fhi = t.param("fhi", p.at("fhi"));
        const int psi = t.logistic(t.param("psi_raw", p.at("psi_raw")));
        const int phi = t.param("phi", p.at("phi"));
        const int kap = t.shift(t.softplus(t.param("kraw", p.at("kraw"))), 1e-6);
        const int s = t.logistic(t.param("s_raw", p.at("s_raw")));

        const int diff = t.matmul(
            t.sheaf_diffuse(t.block_left_mul(w1, x), flo, fhi, psi, &g, d, 0.3, true), w2);
        const int a = t.saturate(x, kap);
        const int r = t.saturate(t.neighbor_signed_sum(x, s, &g, d), kap);
        int next = t.sub(x, t.scale(diff, 0.4));
        next = t.add(next, t.scale(t.hadamard(phi, a), 0.3));
        next = t.add(next, t.scale(t.hadamard(phi, r), 0.2));
        const int flat = t.reshape(next, n, d * f);
        const int logits = t.affine(flat, t.constant(random_matrix(d * f, 1, 99)),
                                    t.constant(Matrix(1, 1)));
        const int shat = t.logistic(logits);
        return t.sum_sq(t.sub(shat, t.constant(y)));
    });
}
