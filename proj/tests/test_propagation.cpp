#include <doctest.h>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "pnd/errors.hpp"
#include "pnd/propagation.hpp"

using namespace pnd;

namespace {

struct RandomCase {
    SparseGraph g;
    NormalizedAdjacency adj;
    DenseMatrix p;
};

RandomCase random_case(std::int64_t max_nodes, RngStream& rng, std::int64_t cols = 3) {
    RandomCase c;
    const std::int64_t n = 1 + static_cast<std::int64_t>(rng.uniform_int(
                                   static_cast<std::uint64_t>(max_nodes)));
    c.g = build_graph(oracle::random_edges(n, 0.2, rng), n);
    c.adj = normalized_adjacency(c.g);
    c.p = oracle::random_prob_rows(n, cols, rng);
    return c;
}

}  // namespace

TEST_CASE("propagate_pnd: gamma -> 0 limit returns the input") {
    RngStream rng(23);
    const RandomCase c = random_case(20, rng);
    const DenseMatrix out = propagate_pnd(c.p, c.adj, PropagationConfig{1e-15, 5, 1e-8});
    CHECK(oracle::max_abs_diff(out, c.p) < 1e-12);
}

TEST_CASE("propagate_pnd: single node is a fixed point") {
    const NormalizedAdjacency adj = normalized_adjacency(build_graph({}, 1));
    DenseMatrix p(1, 2);
    p.at(0, 0) = 0.2;
    p.at(0, 1) = 0.8;
    const DenseMatrix out = propagate_pnd(p, adj, PropagationConfig{0.7, 9, 1e-8});
    CHECK(out.at(0, 0) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(out.at(0, 1) == doctest::Approx(0.8).epsilon(1e-14));
}

TEST_CASE("propagate_pnd: matches the dense matrix-power oracle") {
    RngStream rng(29);
    for (int rep = 0; rep < 25; ++rep) {
        const RandomCase c = random_case(32, rng);
        const DenseMatrix out = propagate_pnd(c.p, c.adj, PropagationConfig{0.9, 10, 1e-8});
        const Eigen::MatrixXd ref =
            oracle::dense_pnd(oracle::dense_adjacency(c.adj), oracle::to_eigen(c.p), 0.9, 10);
        CHECK(oracle::max_abs_diff(out, oracle::from_eigen(ref)) < 1e-10);
    }
}

TEST_CASE("propagate_pnd: input validation") {
    const NormalizedAdjacency adj = normalized_adjacency(build_graph({{0, 1}}, 2));
    CHECK_THROWS_AS(propagate_pnd(DenseMatrix(3, 2), adj, PropagationConfig{}), InputError);
    DenseMatrix bad(2, 2);
    bad.at(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(propagate_pnd(bad, adj, PropagationConfig{}), InputError);
    CHECK_THROWS_AS(propagate_pnd(DenseMatrix(2, 2), adj, PropagationConfig{0.0, 5, 1e-8}),
                    InputError);
    CHECK_THROWS_AS(propagate_pnd(DenseMatrix(2, 2), adj, PropagationConfig{0.5, 0, 1e-8}),
                    InputError);
}

TEST_CASE("propagate_pnd: composition T=a then T=b equals T=a+b") {
    RngStream rng(31);
    for (int rep = 0; rep < 10; ++rep) {
        const RandomCase c = random_case(24, rng);
        const DenseMatrix ab = propagate_pnd(
            propagate_pnd(c.p, c.adj, PropagationConfig{0.8, 3, 1e-8}), c.adj,
            PropagationConfig{0.8, 4, 1e-8});
        const DenseMatrix whole = propagate_pnd(c.p, c.adj, PropagationConfig{0.8, 7, 1e-8});
        CHECK(oracle::max_abs_diff(ab, whole) < 1e-12);
    }
}

TEST_CASE("propagate_pnd: regular-graph mass conservation") {
    // 2-regular ring.
    std::vector<std::pair<NodeId, NodeId>> edges;
    const std::int64_t n = 12;
    for (std::int64_t i = 0; i < n; ++i) {
        edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>((i + 1) % n));
    }
    const NormalizedAdjacency adj = normalized_adjacency(build_graph(edges, n));
    RngStream rng(37);
    const DenseMatrix p = oracle::random_matrix(n, 3, rng, 0.0, 2.0);
    const DenseMatrix out = propagate_pnd(p, adj, PropagationConfig{0.9, 15, 1e-8});
    for (std::int64_t i = 0; i < n; ++i) {
        double in_sum = 0.0;
        double out_sum = 0.0;
        for (std::int64_t j = 0; j < 3; ++j) {
            in_sum += p.at(i, j);
            out_sum += out.at(i, j);
        }
        CHECK(out_sum == doctest::Approx(in_sum).epsilon(1e-10));
    }
}

TEST_CASE("propagation energy monotonicity per step") {
    RngStream rng(41);
    for (int rep = 0; rep < 60; ++rep) {
        const std::int64_t n = 2 + static_cast<std::int64_t>(rng.uniform_int(40));
        const SparseGraph g = build_graph(oracle::random_edges(n, 0.25, rng), n);
        const NormalizedAdjacency adj = normalized_adjacency(g);
        const DenseMatrix f = oracle::random_matrix(n, 3, rng);
        const double gamma = rng.uniform(0.05, 1.0);
        const DenseMatrix f1 = propagate_pnd(f, adj, PropagationConfig{gamma, 1, 1e-8});
        CHECK(dirichlet_energy(f1, adj) <= dirichlet_energy(f, adj) + 1e-9);
    }
}

TEST_CASE("propagate_pnd_fix: all rows pinned returns the input exactly") {
    RngStream rng(43);
    const RandomCase c = random_case(16, rng);
    std::vector<NodeId> all(static_cast<std::size_t>(c.p.rows));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<NodeId>(i);
    const DenseMatrix out = propagate_pnd_fix(c.p, c.adj, PropagationConfig{0.9, 7, 1e-8}, all);
    for (std::size_t k = 0; k < out.values.size(); ++k) {
        CHECK(out.values[k] == c.p.values[k]);  // bit-identical
    }
}

TEST_CASE("propagate_pnd_fix: empty pin set reduces to propagate_pnd") {
    RngStream rng(47);
    const RandomCase c = random_case(16, rng);
    const PropagationConfig cfg{0.85, 6, 1e-8};
    const DenseMatrix a = propagate_pnd_fix(c.p, c.adj, cfg, {});
    const DenseMatrix b = propagate_pnd(c.p, c.adj, cfg);
    CHECK(oracle::max_abs_diff(a, b) == 0.0);
}

TEST_CASE("propagate_pnd_fix: 8-chain with pinned base matches the dense step oracle") {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (NodeId i = 0; i + 1 < 8; ++i) edges.emplace_back(i, i + 1);
    const SparseGraph g = build_graph(edges, 8);
    const NormalizedAdjacency adj = normalized_adjacency(g);
    DenseMatrix p(8, 3, 1.0 / 3.0);
    p.at(0, 0) = 1.0;
    p.at(0, 1) = 0.0;
    p.at(0, 2) = 0.0;
    const std::vector<NodeId> pinned{0};
    const DenseMatrix out = propagate_pnd_fix(p, adj, PropagationConfig{0.9, 20, 1e-8}, pinned);
    const Eigen::MatrixXd ref =
        oracle::dense_pnd(oracle::dense_adjacency(adj), oracle::to_eigen(p), 0.9, 20, pinned);
    CHECK(oracle::max_abs_diff(out, oracle::from_eigen(ref)) < 1e-10);
    // Pinned rows bit-identical to the input.
    CHECK(out.at(0, 0) == 1.0);
    CHECK(out.at(0, 1) == 0.0);
}

TEST_CASE("propagate_pnd_fix: pin index validation") {
    RngStream rng(53);
    const RandomCase c = random_case(8, rng);
    CHECK_THROWS_AS(
        propagate_pnd_fix(c.p, c.adj, PropagationConfig{0.9, 2, 1e-8},
                          {static_cast<NodeId>(c.p.rows)}),
        InputError);
}

TEST_CASE("ppr_exact: single node returns the input") {
    const NormalizedAdjacency adj = normalized_adjacency(build_graph({}, 1));
    DenseMatrix p(1, 2);
    p.at(0, 0) = 0.4;
    p.at(0, 1) = 0.6;
    const DenseMatrix out = ppr_exact(p, adj, 0.85);
    CHECK(out.at(0, 0) == doctest::Approx(0.4).epsilon(1e-10));
    CHECK(out.at(0, 1) == doctest::Approx(0.6).epsilon(1e-10));
}

TEST_CASE("ppr_exact: hand 2x2 inverse") {
    // gamma = 0.5, A_hat all 0.5: (I - 0.5 A_hat)^{-1} scaled by 0.5 maps
    // [[1,0],[0,1]] to [[2/3,1/3],[1/3,2/3]].
    const NormalizedAdjacency adj = normalized_adjacency(build_graph({{0, 1}}, 2));
    DenseMatrix p(2, 2);
    p.at(0, 0) = 1.0;
    p.at(1, 1) = 1.0;
    const DenseMatrix out = ppr_exact(p, adj, 0.5);
    CHECK(out.at(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    CHECK(out.at(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(out.at(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(out.at(1, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("ppr_exact: matches the dense solve oracle") {
    RngStream rng(59);
    for (int rep = 0; rep < 20; ++rep) {
        const RandomCase c = random_case(32, rng);
        const double gamma = rng.uniform(0.1, 0.95);
        const DenseMatrix out = ppr_exact(c.p, c.adj, gamma);
        const std::int64_t n = c.p.rows;
        const Eigen::MatrixXd sys =
            Eigen::MatrixXd::Identity(n, n) - gamma * oracle::dense_adjacency(c.adj);
        const Eigen::MatrixXd ref = (1.0 - gamma) * sys.fullPivLu().solve(oracle::to_eigen(c.p));
        CHECK(oracle::max_abs_diff(out, oracle::from_eigen(ref)) < 1e-8);
    }
}

TEST_CASE("ppr_exact: consistency (I - gamma A_hat) Z / (1 - gamma) == P") {
    RngStream rng(61);
    for (int rep = 0; rep < 10; ++rep) {
        const RandomCase c = random_case(24, rng);
        const double gamma = 0.9;
        const DenseMatrix z = ppr_exact(c.p, c.adj, gamma);
        DenseMatrix back = apply_operator(c.adj, z);
        for (std::size_t k = 0; k < back.values.size(); ++k) {
            back.values[k] = (z.values[k] - gamma * back.values[k]) / (1.0 - gamma);
        }
        CHECK(oracle::max_abs_diff(back, c.p) < 1e-8);
    }
}

TEST_CASE("ppr_exact: gamma >= 1 rejected") {
    const NormalizedAdjacency adj = normalized_adjacency(build_graph({{0, 1}}, 2));
    CHECK_THROWS_AS(ppr_exact(DenseMatrix(2, 2), adj, 1.0), InputError);
}

TEST_CASE("inverse_propagate: gamma = 0 doubles the input") {
    RngStream rng(67);
    const RandomCase c = random_case(12, rng);
    const DenseMatrix out = inverse_propagate(c.p, c.adj, 0.0);
    for (std::size_t k = 0; k < out.values.size(); ++k) {
        CHECK(out.values[k] == doctest::Approx(2.0 * c.p.values[k]).epsilon(1e-15));
    }
}

TEST_CASE("inverse_propagate: single node with gamma = 1 is the identity") {
    const NormalizedAdjacency adj = normalized_adjacency(build_graph({}, 1));
    DenseMatrix p(1, 2);
    p.at(0, 0) = 0.5;
    p.at(0, 1) = 0.5;
    const DenseMatrix out = inverse_propagate(p, adj, 1.0);
    CHECK(out.at(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(out.at(0, 1) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("inverse_propagate: matches the dense oracle") {
    RngStream rng(71);
    for (int rep = 0; rep < 25; ++rep) {
        const RandomCase c = random_case(32, rng);
        const double gamma = rng.uniform(0.05, 1.0);
        const DenseMatrix out = inverse_propagate(c.p, c.adj, gamma);
        const std::int64_t n = c.p.rows;
        const Eigen::MatrixXd b =
            2.0 * Eigen::MatrixXd::Identity(n, n) - gamma * oracle::dense_adjacency(c.adj);
        CHECK(oracle::max_abs_diff(out, oracle::from_eigen(b * oracle::to_eigen(c.p))) < 1e-12);
    }
}

TEST_CASE("normalize_rows: already normalized row passes through") {
    DenseMatrix p(1, 2);
    p.at(0, 0) = 0.3;
    p.at(0, 1) = 0.7;
    const ProbMatrix out = normalize_rows(p, 1e-8);
    CHECK(out.values.at(0, 0) == doctest::Approx(0.3).epsilon(1e-14));
    CHECK(out.values.at(0, 1) == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("normalize_rows: clamps negatives to the floor") {
    DenseMatrix p(1, 2);
    p.at(0, 0) = -0.2;
    p.at(0, 1) = 1.0;
    const ProbMatrix out = normalize_rows(p, 1e-8);
    CHECK(out.values.at(0, 0) == doctest::Approx(1e-8).epsilon(1e-6));
    CHECK(out.values.at(0, 1) == doctest::Approx(1.0).epsilon(1e-7));
    CHECK(out.values.at(0, 0) + out.values.at(0, 1) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("normalize_rows: uniform scaling") {
    DenseMatrix p(1, 2, 2.0);
    const ProbMatrix out = normalize_rows(p, 1e-8);
    CHECK(out.values.at(0, 0) == doctest::Approx(0.5));
    CHECK(out.values.at(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("normalize_rows: rows sum to one on random input") {
    RngStream rng(73);
    const DenseMatrix p = oracle::random_matrix(20, 6, rng, -0.5, 2.0);
    const ProbMatrix out = normalize_rows(p, 1e-8);
    for (std::int64_t i = 0; i < 20; ++i) {
        double sum = 0.0;
        for (std::int64_t j = 0; j < 6; ++j) {
            CHECK(out.values.at(i, j) >= 0.0);
            sum += out.values.at(i, j);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}
