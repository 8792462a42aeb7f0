#include "pnd/sparse_graph.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pnd/errors.hpp"

namespace pnd {

SparseGraph build_graph(const std::vector<std::pair<NodeId, NodeId>>& edges,
                        std::int64_t num_nodes) {
    if (num_nodes < 0) throw InputError("build_graph: negative node count");
    std::vector<std::pair<NodeId, NodeId>> dir;
    dir.reserve(edges.size() * 2);
    for (const auto& [u, v] : edges) {
        if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes) {
            throw InputError("build_graph: node id out of range: (" + std::to_string(u) +
                             "," + std::to_string(v) + ")");
        }
        if (u == v) continue;  // input self-loops dropped
        dir.emplace_back(u, v);
        dir.emplace_back(v, u);
    }
    std::sort(dir.begin(), dir.end());
    dir.erase(std::unique(dir.begin(), dir.end()), dir.end());

    SparseGraph g;
    g.num_nodes = num_nodes;
    g.row_ptr.assign(static_cast<std::size_t>(num_nodes) + 1, 0);
    g.col_idx.reserve(dir.size());
    for (const auto& [u, v] : dir) {
        g.row_ptr[static_cast<std::size_t>(u) + 1]++;
        g.col_idx.push_back(v);
    }
    for (std::int64_t i = 0; i < num_nodes; ++i) {
        g.row_ptr[static_cast<std::size_t>(i) + 1] += g.row_ptr[static_cast<std::size_t>(i)];
    }
    g.degrees.resize(static_cast<std::size_t>(num_nodes));
    for (std::int64_t i = 0; i < num_nodes; ++i) {
        g.degrees[static_cast<std::size_t>(i)] =
            g.row_ptr[static_cast<std::size_t>(i) + 1] - g.row_ptr[static_cast<std::size_t>(i)];
    }
    return g;
}

NormalizedAdjacency normalized_adjacency(const SparseGraph& g) {
    NormalizedAdjacency a;
    a.num_nodes = g.num_nodes;
    a.row_ptr.assign(static_cast<std::size_t>(g.num_nodes) + 1, 0);
    a.col_idx.reserve(g.col_idx.size() + static_cast<std::size_t>(g.num_nodes));
    a.weights.reserve(a.col_idx.capacity());

    std::vector<double> inv_sqrt(static_cast<std::size_t>(g.num_nodes));
    for (std::int64_t i = 0; i < g.num_nodes; ++i) {
        inv_sqrt[static_cast<std::size_t>(i)] =
            1.0 / std::sqrt(static_cast<double>(g.degrees[static_cast<std::size_t>(i)] + 1));
    }

    for (std::int64_t i = 0; i < g.num_nodes; ++i) {
        const double di = inv_sqrt[static_cast<std::size_t>(i)];
        bool diag_emitted = false;
        for (std::int64_t k = g.row_ptr[static_cast<std::size_t>(i)];
             k < g.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            const NodeId j = g.col_idx[static_cast<std::size_t>(k)];
            if (!diag_emitted && j > i) {
                a.col_idx.push_back(static_cast<NodeId>(i));
                a.weights.push_back(di * di);
                diag_emitted = true;
            }
            a.col_idx.push_back(j);
            a.weights.push_back(di * inv_sqrt[static_cast<std::size_t>(j)]);
        }
        if (!diag_emitted) {
            a.col_idx.push_back(static_cast<NodeId>(i));
            a.weights.push_back(di * di);
        }
        a.row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<std::int64_t>(a.col_idx.size());
    }
    return a;
}

NormalizedAdjacency normalized_adjacency_no_loops(const SparseGraph& g) {
    NormalizedAdjacency a;
    a.num_nodes = g.num_nodes;
    a.row_ptr = g.row_ptr;
    a.col_idx = g.col_idx;
    a.weights.resize(g.col_idx.size());
    std::vector<double> inv_sqrt(static_cast<std::size_t>(g.num_nodes), 0.0);
    for (std::int64_t i = 0; i < g.num_nodes; ++i) {
        if (g.degrees[static_cast<std::size_t>(i)] > 0) {
            inv_sqrt[static_cast<std::size_t>(i)] =
                1.0 / std::sqrt(static_cast<double>(g.degrees[static_cast<std::size_t>(i)]));
        }
    }
    for (std::int64_t i = 0; i < g.num_nodes; ++i) {
        for (std::int64_t k = g.row_ptr[static_cast<std::size_t>(i)];
             k < g.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            const NodeId j = g.col_idx[static_cast<std::size_t>(k)];
            a.weights[static_cast<std::size_t>(k)] =
                inv_sqrt[static_cast<std::size_t>(i)] * inv_sqrt[static_cast<std::size_t>(j)];
        }
    }
    return a;
}

DenseMatrix apply_operator(const NormalizedAdjacency& m, const DenseMatrix& p) {
    if (m.num_nodes != p.rows) throw InputError("apply_operator: shape mismatch");
    DenseMatrix out(p.rows, p.cols);
    for (std::int64_t i = 0; i < m.num_nodes; ++i) {
        double* dst = out.row(i);
        for (std::int64_t k = m.row_ptr[static_cast<std::size_t>(i)];
             k < m.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            const double w = m.weights[static_cast<std::size_t>(k)];
            const double* src = p.row(m.col_idx[static_cast<std::size_t>(k)]);
            for (std::int64_t c = 0; c < p.cols; ++c) dst[c] += w * src[c];
        }
    }
    return out;
}

DenseMatrix apply_operator_transpose(const NormalizedAdjacency& m, const DenseMatrix& p) {
    if (m.num_nodes != p.rows) throw InputError("apply_operator_transpose: shape mismatch");
    DenseMatrix out(p.rows, p.cols);
    for (std::int64_t i = 0; i < m.num_nodes; ++i) {
        const double* src = p.row(i);
        for (std::int64_t k = m.row_ptr[static_cast<std::size_t>(i)];
             k < m.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            const double w = m.weights[static_cast<std::size_t>(k)];
            double* dst = out.row(m.col_idx[static_cast<std::size_t>(k)]);
            for (std::int64_t c = 0; c < p.cols; ++c) dst[c] += w * src[c];
        }
    }
    return out;
}

double homophily(const SparseGraph& g, const std::vector<int>& labels) {
    if (static_cast<std::int64_t>(labels.size()) != g.num_nodes) {
        throw InputError("homophily: labels length != num_nodes");
    }
    if (g.num_undirected_edges() == 0) {
        throw InputError("homophily: undefined on an edgeless graph");
    }
    std::int64_t same = 0;
    for (std::int64_t i = 0; i < g.num_nodes; ++i) {
        for (std::int64_t k = g.row_ptr[static_cast<std::size_t>(i)];
             k < g.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            const NodeId j = g.col_idx[static_cast<std::size_t>(k)];
            if (j > i && labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
                ++same;
            }
        }
    }
    return static_cast<double>(same) / static_cast<double>(g.num_undirected_edges());
}

double dirichlet_energy(const DenseMatrix& f, const NormalizedAdjacency& adj) {
    if (f.rows != adj.num_nodes) throw InputError("dirichlet_energy: shape mismatch");
    const DenseMatrix af = apply_operator(adj, f);
    double acc = 0.0;
    for (std::size_t k = 0; k < f.values.size(); ++k) {
        acc += f.values[k] * (f.values[k] - af.values[k]);
    }
    return acc;
}

}  // namespace pnd
