#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pnd/dense_matrix.hpp"
#include "pnd/propagation.hpp"
#include "pnd/rng.hpp"
#include "pnd/sparse_graph.hpp"

namespace pnd {

struct Dataset {
    SparseGraph graph;
    DenseMatrix features;  // num_nodes x feature_dim
    std::vector<int> labels;
    int num_classes = 0;
    std::string name;
};

// Transductive runs leave test_ind empty; the four sets partition V.
struct Split {
    std::vector<NodeId> train;
    std::vector<NodeId> val;
    std::vector<NodeId> test_obs;
    std::vector<NodeId> test_ind;
};

// Directory layout: manifest.json, edges.tsv, features.tsv, labels.tsv,
// optional splits.json. Counts are validated against the manifest; errors
// name the offending file and line.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

std::optional<Split> load_splits(const std::filesystem::path& dir);
void save_splits(const Split& split, const std::filesystem::path& dir);

// 20/30 nodes per class for train/val, remainder the test pool; in
// inductive mode floor(inductive_frac * |pool|) nodes are held out. Small
// classes fall back to proportional sizes (warned on stderr) unless
// allow_fallback is off.
Split make_splits(const std::vector<int>& labels, int num_classes, std::uint64_t seed,
                  int per_class_train = 20, int per_class_val = 30, bool inductive = false,
                  double inductive_frac = 0.2, bool allow_fallback = true);

// Every edge touching `ind` removed; node count unchanged.
SparseGraph remove_inductive_edges(const SparseGraph& g, const std::vector<NodeId>& ind);

struct ChainsData {
    Dataset dataset;
    std::vector<NodeId> base_nodes;  // one-hot feature carrier per chain
    std::vector<NodeId> far_nodes;   // more than 2 hops from their base
};

// Disjoint chains, one class per chain, class signal only at the base
// node. feature_noise adds seeded Gaussian noise to every entry so that
// nodes stay distinguishable to a feature-only model (0 reproduces the
// strict zero-feature layout).
ChainsData gen_chains(int num_chains, int length, int num_classes, std::uint64_t seed,
                      double feature_noise = 0.1);

// d-regular graph where every node has exactly round(h*d) same-class
// neighbors, built from per-class circulants plus balanced inter-class
// circulant edges. Throws ConstructionError when (d, h, sizes) are
// infeasible. Feature matrix is one-hot labels (callers that need
// features).
Dataset gen_regular_homophily(int degree, double h, int num_classes, int nodes_per_class,
                              std::uint64_t seed);

// Teacher-output model of the self-correction analysis: every node carries
// p on its predicted class; the star row is [q, (1-q)/(|Y|-1), ...] with
// class 0 as its true class; round(epsilon * (|V|-1)) other nodes are
// flipped to a uniformly chosen incorrect class.
ProbMatrix synth_teacher_output(const std::vector<int>& labels, int num_classes, double p,
                                double epsilon, double q, NodeId star, RngStream& rng);

}  // namespace pnd
