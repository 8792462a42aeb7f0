#pragma once

#include <vector>

#include "pnd/dense_matrix.hpp"
#include "pnd/sparse_graph.hpp"

namespace pnd {

struct PropagationConfig {
    double gamma = 0.9;        // propagation strength, (0, 1]
    int iterations = 20;       // T
    double floor_value = 1e-8; // renormalization floor

    void validate() const;
};

// Row-stochastic class scores, |V| x |Y|. Only normalize_rows constructs
// one; raw propagation output stays a plain DenseMatrix.
struct ProbMatrix {
    DenseMatrix values;

    std::int64_t rows() const { return values.rows; }
    std::int64_t cols() const { return values.cols; }
};

// T applications of M = gamma * A_hat + (1 - gamma) * I.
DenseMatrix propagate_pnd(const DenseMatrix& p, const NormalizedAdjacency& adj,
                          const PropagationConfig& cfg);

// Same recursion, but after every step rows in train_idx are reset to the
// original input rows (bit-identical).
DenseMatrix propagate_pnd_fix(const DenseMatrix& p, const NormalizedAdjacency& adj,
                              const PropagationConfig& cfg,
                              const std::vector<NodeId>& train_idx);

// Exact personalized PageRank (1 - gamma)(I - gamma * A_hat)^{-1} P, solved
// by conjugate gradients per column to residual <= 1e-10.
DenseMatrix ppr_exact(const DenseMatrix& p, const NormalizedAdjacency& adj, double gamma);

// (2I - gamma * A_hat) P. Output rows may have negative entries; normalize
// before using them as a KL distribution.
DenseMatrix inverse_propagate(const DenseMatrix& p, const NormalizedAdjacency& adj,
                              double gamma);

// Clamp entries to at least floor_value, then divide each row by its sum.
ProbMatrix normalize_rows(const DenseMatrix& p, double floor_value);

}  // namespace pnd
