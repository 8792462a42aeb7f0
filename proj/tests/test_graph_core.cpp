#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "pnd/errors.hpp"
#include "pnd/sparse_graph.hpp"

using namespace pnd;

TEST_CASE("build_graph: empty edge list gives isolated nodes") {
    const SparseGraph g = build_graph({}, 3);
    CHECK(g.num_nodes == 3);
    CHECK(g.num_directed_entries() == 0);
    for (auto d : g.degrees) CHECK(d == 0);
}

TEST_CASE("build_graph: single edge symmetrized") {
    const SparseGraph g = build_graph({{0, 1}}, 2);
    CHECK(g.degrees == std::vector<std::int64_t>{1, 1});
    CHECK(g.num_directed_entries() == 2);
}

TEST_CASE("build_graph: duplicates, both orientations and self-loops collapse") {
    const SparseGraph g = build_graph({{0, 1}, {1, 0}, {0, 1}, {2, 2}}, 3);
    CHECK(g.num_undirected_edges() == 1);
    CHECK(g.degrees == std::vector<std::int64_t>{1, 1, 0});
}

TEST_CASE("build_graph: out-of-range id rejected") {
    CHECK_THROWS_AS(build_graph({{0, 5}}, 3), InputError);
}

TEST_CASE("build_graph: CSR invariants on random graphs") {
    RngStream rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        const std::int64_t n = 2 + static_cast<std::int64_t>(rng.uniform_int(40));
        const SparseGraph g = build_graph(oracle::random_edges(n, 0.2, rng), n);
        for (std::int64_t i = 0; i < n; ++i) {
            CHECK(g.degrees[i] == g.row_ptr[i + 1] - g.row_ptr[i]);
            for (std::int64_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k) {
                if (k > g.row_ptr[i]) CHECK(g.col_idx[k] > g.col_idx[k - 1]);
                CHECK(g.col_idx[k] != i);
            }
        }
    }
}

TEST_CASE("normalized_adjacency: single node is [[1]]") {
    const NormalizedAdjacency a = normalized_adjacency(build_graph({}, 1));
    REQUIRE(a.col_idx.size() == 1);
    CHECK(a.col_idx[0] == 0);
    CHECK(a.weights[0] == doctest::Approx(1.0));
}

TEST_CASE("normalized_adjacency: two nodes, one edge -> all entries 0.5") {
    // Hand evaluation of D_hat^{-1/2}(A+I)D_hat^{-1/2} with both degrees 1.
    const NormalizedAdjacency a = normalized_adjacency(build_graph({{0, 1}}, 2));
    REQUIRE(a.weights.size() == 4);
    for (double w : a.weights) CHECK(w == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("normalized_adjacency: rows of a 3-regular graph sum to 1") {
    // K4 is 3-regular.
    const SparseGraph g = build_graph({{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}, 4);
    const NormalizedAdjacency a = normalized_adjacency(g);
    for (std::int64_t i = 0; i < 4; ++i) {
        double sum = 0.0;
        for (std::int64_t k = a.row_ptr[i]; k < a.row_ptr[i + 1]; ++k) sum += a.weights[k];
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("normalized_adjacency: entries match the closed form and stay symmetric") {
    RngStream rng(11);
    for (int rep = 0; rep < 10; ++rep) {
        const std::int64_t n = 2 + static_cast<std::int64_t>(rng.uniform_int(30));
        const SparseGraph g = build_graph(oracle::random_edges(n, 0.3, rng), n);
        const NormalizedAdjacency a = normalized_adjacency(g);
        const Eigen::MatrixXd dense = oracle::dense_adjacency(a);
        // Bit-identical symmetry.
        for (std::int64_t i = 0; i < n; ++i) {
            for (std::int64_t j = 0; j < n; ++j) {
                CHECK(dense(i, j) == dense(j, i));
            }
        }
        for (std::int64_t i = 0; i < n; ++i) {
            const double di = static_cast<double>(g.degrees[i] + 1);
            CHECK(dense(i, i) == doctest::Approx(1.0 / di).epsilon(1e-15));
            for (std::int64_t k = g.row_ptr[i]; k < g.row_ptr[i + 1]; ++k) {
                const NodeId j = g.col_idx[k];
                const double dj = static_cast<double>(g.degrees[j] + 1);
                CHECK(dense(i, j) == doctest::Approx(1.0 / std::sqrt(di * dj)).epsilon(1e-15));
            }
        }
    }
}

TEST_CASE("spectral containment on small graphs") {
    RngStream rng(13);
    for (int rep = 0; rep < 15; ++rep) {
        const std::int64_t n = 2 + static_cast<std::int64_t>(rng.uniform_int(31));
        const SparseGraph g = build_graph(oracle::random_edges(n, 0.25, rng), n);
        const Eigen::MatrixXd a = oracle::dense_adjacency(normalized_adjacency(g));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a);
        for (std::int64_t i = 0; i < n; ++i) {
            CHECK(es.eigenvalues()(i) >= -1.0 - 1e-10);
            CHECK(es.eigenvalues()(i) <= 1.0 + 1e-10);
        }
    }
}

TEST_CASE("apply_operator: single node identity") {
    const NormalizedAdjacency a = normalized_adjacency(build_graph({}, 1));
    DenseMatrix p(1, 2);
    p.at(0, 0) = 0.3;
    p.at(0, 1) = 0.7;
    const DenseMatrix out = apply_operator(a, p);
    CHECK(out.at(0, 0) == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(out.at(0, 1) == doctest::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("apply_operator: two-node hand case") {
    const NormalizedAdjacency a = normalized_adjacency(build_graph({{0, 1}}, 2));
    DenseMatrix p(2, 2);
    p.at(0, 0) = 1.0;
    p.at(1, 1) = 1.0;
    const DenseMatrix out = apply_operator(a, p);
    for (double v : out.values) CHECK(v == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("apply_operator: agrees with the dense oracle on 100 random graphs") {
    RngStream rng(17);
    for (int rep = 0; rep < 100; ++rep) {
        const std::int64_t n = 1 + static_cast<std::int64_t>(rng.uniform_int(64));
        const SparseGraph g = build_graph(oracle::random_edges(n, 0.15, rng), n);
        const NormalizedAdjacency a = normalized_adjacency(g);
        const DenseMatrix p = oracle::random_matrix(n, 5, rng);
        const DenseMatrix fast = apply_operator(a, p);
        const DenseMatrix ref =
            oracle::from_eigen(oracle::dense_adjacency(a) * oracle::to_eigen(p));
        CHECK(oracle::max_abs_diff(fast, ref) < 1e-12);
    }
}

TEST_CASE("apply_operator: shape mismatch rejected") {
    const NormalizedAdjacency a = normalized_adjacency(build_graph({{0, 1}}, 2));
    CHECK_THROWS_AS(apply_operator(a, DenseMatrix(3, 2)), InputError);
}

TEST_CASE("homophily: uniform labels give 1, alternating path gives 0") {
    const SparseGraph path = build_graph({{0, 1}, {1, 2}, {2, 3}}, 4);
    CHECK(homophily(path, {1, 1, 1, 1}) == doctest::Approx(1.0));
    CHECK(homophily(path, {0, 1, 0, 1}) == doctest::Approx(0.0));
}

TEST_CASE("homophily: edgeless graph is undefined") {
    CHECK_THROWS_AS(homophily(build_graph({}, 3), std::vector<int>{0, 1, 2}), InputError);
}

TEST_CASE("dirichlet_energy: zero and constant signals") {
    const SparseGraph g = build_graph({{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}, 4);
    const NormalizedAdjacency a = normalized_adjacency(g);
    CHECK(dirichlet_energy(DenseMatrix(4, 3), a) == doctest::Approx(0.0));
    // Constant rows on a regular graph: rows of A_hat sum to 1, so F is in
    // the kernel of I - A_hat.
    DenseMatrix f(4, 2);
    for (std::int64_t i = 0; i < 4; ++i) {
        f.at(i, 0) = 2.5;
        f.at(i, 1) = -1.25;
    }
    CHECK(dirichlet_energy(f, a) == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("dirichlet_energy: matches dense tr(F^T L F) and stays nonnegative") {
    RngStream rng(19);
    for (int rep = 0; rep < 40; ++rep) {
        const std::int64_t n = 2 + static_cast<std::int64_t>(rng.uniform_int(63));
        const SparseGraph g = build_graph(oracle::random_edges(n, 0.2, rng), n);
        const NormalizedAdjacency a = normalized_adjacency(g);
        const DenseMatrix f = oracle::random_matrix(n, 4, rng);
        const Eigen::MatrixXd fe = oracle::to_eigen(f);
        const Eigen::MatrixXd lap =
            Eigen::MatrixXd::Identity(n, n) - oracle::dense_adjacency(a);
        const double ref = (fe.transpose() * lap * fe).trace();
        const double got = dirichlet_energy(f, a);
        CHECK(got == doctest::Approx(ref).epsilon(1e-10));
        CHECK(got >= -1e-10);
    }
}
