#pragma once

// Brute-force reference implementations used only by tests. Everything
// here goes through dense |V| x |V| matrices so it stays independent of
// the CSR code paths it checks.

#include <Eigen/Dense>
#include <vector>

#include "pnd/dense_matrix.hpp"
#include "pnd/rng.hpp"
#include "pnd/sparse_graph.hpp"

namespace oracle {

using pnd::DenseMatrix;
using pnd::NodeId;

inline Eigen::MatrixXd to_eigen(const DenseMatrix& m) {
    Eigen::MatrixXd out(m.rows, m.cols);
    for (std::int64_t i = 0; i < m.rows; ++i) {
        for (std::int64_t j = 0; j < m.cols; ++j) out(i, j) = m.at(i, j);
    }
    return out;
}

inline DenseMatrix from_eigen(const Eigen::MatrixXd& m) {
    DenseMatrix out(m.rows(), m.cols());
    for (std::int64_t i = 0; i < m.rows(); ++i) {
        for (std::int64_t j = 0; j < m.cols(); ++j) out.at(i, j) = m(i, j);
    }
    return out;
}

inline Eigen::MatrixXd dense_adjacency(const pnd::NormalizedAdjacency& adj) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(adj.num_nodes, adj.num_nodes);
    for (std::int64_t i = 0; i < adj.num_nodes; ++i) {
        for (std::int64_t k = adj.row_ptr[static_cast<std::size_t>(i)];
             k < adj.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            out(i, adj.col_idx[static_cast<std::size_t>(k)]) =
                adj.weights[static_cast<std::size_t>(k)];
        }
    }
    return out;
}

// Random Erdos-Renyi-ish edge list; may generate isolated nodes.
inline std::vector<std::pair<NodeId, NodeId>> random_edges(std::int64_t n, double p,
                                                           pnd::RngStream& rng) {
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t j = i + 1; j < n; ++j) {
            if (rng.uniform() < p) {
                edges.emplace_back(static_cast<NodeId>(i), static_cast<NodeId>(j));
            }
        }
    }
    return edges;
}

inline DenseMatrix random_matrix(std::int64_t rows, std::int64_t cols, pnd::RngStream& rng,
                                 double lo = -1.0, double hi = 1.0) {
    DenseMatrix m(rows, cols);
    for (double& v : m.values) v = rng.uniform(lo, hi);
    return m;
}

// Rows that form random probability distributions.
inline DenseMatrix random_prob_rows(std::int64_t rows, std::int64_t cols, pnd::RngStream& rng) {
    DenseMatrix m(rows, cols);
    for (std::int64_t i = 0; i < rows; ++i) {
        double sum = 0.0;
        for (std::int64_t j = 0; j < cols; ++j) {
            m.at(i, j) = rng.uniform(0.01, 1.0);
            sum += m.at(i, j);
        }
        for (std::int64_t j = 0; j < cols; ++j) m.at(i, j) /= sum;
    }
    return m;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    double out = 0.0;
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        out = std::max(out, std::abs(a.values[k] - b.values[k]));
    }
    return out;
}

// The P&D recursion simulated densely: T applications of
// gamma * A + (1 - gamma) * I, optionally resetting pinned rows.
inline Eigen::MatrixXd dense_pnd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& p0,
                                 double gamma, int iters,
                                 const std::vector<NodeId>& pinned = {}) {
    Eigen::MatrixXd p = p0;
    for (int l = 0; l < iters; ++l) {
        p = gamma * (a * p) + (1.0 - gamma) * p;
        for (NodeId i : pinned) p.row(i) = p0.row(i);
    }
    return p;
}

}  // namespace oracle
