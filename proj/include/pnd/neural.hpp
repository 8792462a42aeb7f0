#pragma once

#include <functional>
#include <span>
#include <vector>

#include "pnd/dense_matrix.hpp"
#include "pnd/propagation.hpp"
#include "pnd/rng.hpp"

namespace pnd {

struct LinearLayer {
    DenseMatrix weight;        // in x out
    std::vector<double> bias;  // out
};

struct MlpModel {
    std::vector<LinearLayer> layers;
    double dropout_rate = 0.0;  // applied to hidden activations in train mode

    std::int64_t in_dim() const { return layers.front().weight.rows; }
    std::int64_t out_dim() const { return layers.back().weight.cols; }
};

// Glorot-uniform weights, zero biases. dims = {in, hidden..., out}.
MlpModel make_mlp(const std::vector<std::int64_t>& dims, double dropout_rate, RngStream& rng);

// Everything backprop needs from a forward pass.
struct ForwardCache {
    SparseFeatures owned_input;  // filled when the dense overload was used
    const SparseFeatures* input = nullptr;
    std::vector<DenseMatrix> pre_act;        // hidden pre-activations
    std::vector<DenseMatrix> hidden;         // layer inputs after ReLU (+ dropout)
    std::vector<DenseMatrix> dropout_scale;  // per-entry 0 or 1/(1-rate); empty when off
    bool train_mode = false;
};

// Dropout uses inverted scaling and touches hidden activations only.
DenseMatrix mlp_forward(const MlpModel& model, const SparseFeatures& x, bool train_mode,
                        RngStream& rng, ForwardCache* cache = nullptr);
DenseMatrix mlp_forward(const MlpModel& model, const DenseMatrix& x, bool train_mode,
                        RngStream& rng, ForwardCache* cache = nullptr);

struct Gradients {
    std::vector<DenseMatrix> weight;
    std::vector<std::vector<double>> bias;
};

Gradients backprop(const MlpModel& model, const ForwardCache& cache,
                   const DenseMatrix& grad_logits);

DenseMatrix softmax_rows(const DenseMatrix& logits);
DenseMatrix log_softmax_rows(const DenseMatrix& logits);

struct LossResult {
    double loss = 0.0;
    DenseMatrix grad_logits;  // full logits shape; zero outside `rows`
};

// Mean over `rows` of KL(target row || softmax(logits row)).
LossResult kl_loss(const DenseMatrix& logits, const ProbMatrix& target,
                   const std::vector<NodeId>& rows);

// Mean cross-entropy against integer labels over `rows`.
LossResult ce_loss(const DenseMatrix& logits, const std::vector<int>& labels,
                   const std::vector<NodeId>& rows);

// Bias-corrected Adam; weight decay enters the gradient (L2-in-gradient).
struct AdamState {
    double lr = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
    std::int64_t step_count = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;
};

void adam_step(std::vector<std::span<double>> params,
               std::vector<std::span<const double>> grads, AdamState& state);

// Parameter blocks in a fixed order (layer weights then bias, per layer).
std::vector<std::span<double>> collect_params(MlpModel& model);
std::vector<std::span<const double>> collect_grads(const Gradients& g);

// Compares analytic gradients against central finite differences (step h)
// on up to max_params sampled parameters; returns the max relative error.
// loss(logits) must be deterministic; run with dropout off.
double grad_check(MlpModel& model, const SparseFeatures& x,
                  const std::function<LossResult(const DenseMatrix&)>& loss,
                  RngStream& rng, int max_params = 200, double h = 1e-6);

}  // namespace pnd
