#pragma once

#include <filesystem>
#include <optional>
#include <vector>

#include "pnd/datasets.hpp"
#include "pnd/dense_matrix.hpp"
#include "pnd/neural.hpp"
#include "pnd/sparse_graph.hpp"

namespace pnd {

struct SageLayer {
    DenseMatrix w_self;  // in x out
    DenseMatrix w_nbr;   // in x out
    std::vector<double> bias;
};

// 2-layer GraphSAGE with mean aggregation.
struct SageModel {
    SageLayer l1;
    SageLayer l2;
    double dropout_rate = 0.0;

    std::int64_t in_dim() const { return l1.w_self.rows; }
    std::int64_t hidden_dim() const { return l1.w_self.cols; }
    std::int64_t out_dim() const { return l2.w_self.cols; }
};

struct TeacherConfig {
    double lr = 0.01;
    double weight_decay = 0.0005;
    double dropout = 0.0;
    int hidden_dim = 128;
    int max_epochs = 500;
    int patience = 50;
    bool use_fanout = false;  // uniform neighbor sampling during training
    int fanout1 = 5;
    int fanout2 = 5;
};

SageModel make_sage(std::int64_t in_dim, std::int64_t hidden_dim, std::int64_t out_dim,
                    double dropout_rate, RngStream& rng);

struct SageCache {
    const SparseFeatures* x = nullptr;
    const SparseFeatures* agg_x = nullptr;  // mean-aggregated features
    DenseMatrix pre_act1;
    DenseMatrix h1;      // after ReLU (+ dropout)
    DenseMatrix agg_h1;  // aggregated hidden
    DenseMatrix dropout_scale;
    // Sampled neighbor lists when fan-out mode is active (layer 1 and 2).
    std::vector<std::vector<NodeId>> sampled1;
    std::vector<std::vector<NodeId>> sampled2;
    bool sampled = false;
};

// out[i] = mean over neighbors of rows of m; zero row for isolated nodes.
DenseMatrix mean_aggregate(const SparseGraph& g, const DenseMatrix& m);
SparseFeatures mean_aggregate(const SparseGraph& g, const SparseFeatures& m);
// Transpose of the mean aggregation (scatter), for backprop.
DenseMatrix mean_aggregate_transpose(const SparseGraph& g, const DenseMatrix& m);

// Per layer: act(W_self h_i + W_nbr mean_{j in N(i)} h_j + b); ReLU between
// the two layers only. agg_x must be mean_aggregate(g, x). When
// cfg fan-out sampling is on and train_mode is set, neighbor means run
// over sampled lists instead.
DenseMatrix sage_forward(const SageModel& model, const SparseGraph& g, const SparseFeatures& x,
                         const SparseFeatures& agg_x, bool train_mode, RngStream& rng,
                         SageCache* cache = nullptr, const TeacherConfig* cfg = nullptr);

struct SageGradients {
    SageLayer l1;
    SageLayer l2;
};

SageGradients sage_backprop(const SageModel& model, const SparseGraph& g, const SageCache& cache,
                            const DenseMatrix& grad_logits);

std::vector<std::span<double>> collect_params(SageModel& model);
std::vector<std::span<const double>> collect_grads(const SageGradients& g);

struct TeacherMetrics {
    std::vector<double> train_acc;
    std::vector<double> val_acc;
    std::vector<double> loss;
    int best_epoch = -1;
    double best_val_acc = 0.0;
    double test_obs_acc = 0.0;
    std::optional<double> test_ind_acc;
};

struct TrainedTeacher {
    SageModel model;
    ProbMatrix probs;  // P^t over all nodes of g
    TeacherMetrics metrics;
};

// CE on split.train, early stopping on val accuracy (ties keep the
// earliest epoch), best parameters restored. For inductive runs pass the
// graph with inductive edges already removed.
TrainedTeacher train_teacher(const SparseGraph& g, const SparseFeatures& x,
                             const std::vector<int>& labels, const Split& split,
                             const TeacherConfig& cfg, RngStream& rng);

// Binary checkpoint: magic "PNDT", version, dims, little-endian f64 blobs.
void save_teacher_checkpoint(const SageModel& model, const std::filesystem::path& path);
SageModel load_teacher_checkpoint(const std::filesystem::path& path);

// One row of tab-separated probabilities per node.
void save_prob_matrix_tsv(const ProbMatrix& probs, const std::filesystem::path& path);
ProbMatrix load_prob_matrix_tsv(const std::filesystem::path& path);

}  // namespace pnd
