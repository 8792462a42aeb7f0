#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pnd/dense_matrix.hpp"

namespace pnd {

// Undirected graph in CSR form. Each undirected edge is stored in both
// directions, columns strictly increasing within a row, no self-loops.
struct SparseGraph {
    std::int64_t num_nodes = 0;
    std::vector<std::int64_t> row_ptr;  // num_nodes + 1
    std::vector<NodeId> col_idx;        // neighbor ids
    std::vector<std::int64_t> degrees;  // row_ptr[i+1] - row_ptr[i]

    std::int64_t num_directed_entries() const { return static_cast<std::int64_t>(col_idx.size()); }
    std::int64_t num_undirected_edges() const { return num_directed_entries() / 2; }
};

// Symmetrically normalized adjacency with self-loops,
// A_hat = D_hat^{-1/2} (A + I) D_hat^{-1/2} with D_hat = D + I,
// stored in CSR with explicit diagonal entries.
struct NormalizedAdjacency {
    std::int64_t num_nodes = 0;
    std::vector<std::int64_t> row_ptr;
    std::vector<NodeId> col_idx;
    std::vector<double> weights;
};

// Deduplicates, symmetrizes, drops input self-loops. Node ids must be
// < num_nodes.
SparseGraph build_graph(const std::vector<std::pair<NodeId, NodeId>>& edges,
                        std::int64_t num_nodes);

NormalizedAdjacency normalized_adjacency(const SparseGraph& g);

// The proof-side convention: D^{-1/2} A D^{-1/2}, no self-loops. Rows of
// isolated nodes are empty. Used by the theory module only.
NormalizedAdjacency normalized_adjacency_no_loops(const SparseGraph& g);

// Exact CSR x dense product, per-row summation in ascending column order.
DenseMatrix apply_operator(const NormalizedAdjacency& m, const DenseMatrix& p);

// out[j] += sum_i w(i,j) p[i]: the transpose product, same CSR, used by
// backprop through non-symmetric operators.
DenseMatrix apply_operator_transpose(const NormalizedAdjacency& m, const DenseMatrix& p);

// Fraction of undirected edges whose endpoints share a label.
double homophily(const SparseGraph& g, const std::vector<int>& labels);

// tr(F^T (I - A_hat) F) without materializing the Laplacian.
double dirichlet_energy(const DenseMatrix& f, const NormalizedAdjacency& adj);

}  // namespace pnd
