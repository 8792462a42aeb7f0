#pragma once

#include <optional>
#include <vector>

#include "pnd/datasets.hpp"
#include "pnd/dense_matrix.hpp"
#include "pnd/neural.hpp"
#include "pnd/propagation.hpp"
#include "pnd/sparse_graph.hpp"

namespace pnd {

enum class DistillVariant {
    GLNN,           // plain KL against P^t
    InvKD,          // (2I - gamma A_hat) applied to the student side
    PND,            // KL against the propagated teacher output
    PND_FIX,        // propagation with training rows re-pinned
    CONV_ABLATION,  // A_hat applied to the student side
};

const char* variant_name(DistillVariant v);
DistillVariant variant_from_name(const std::string& name);

struct DistillConfig {
    DistillVariant variant = DistillVariant::GLNN;
    double gamma = 0.9;
    int iterations = 20;
    double alpha = 0.0;  // CE mixing weight
    double floor_value = 1e-8;

    void validate() const;
};

// The KL target for a variant. GLNN and the student-side variants keep
// P^t as-is; PND/PND_FIX propagate and renormalize, PND_FIX re-pins the
// training rows to P^t afterwards.
ProbMatrix make_target(const DistillConfig& cfg, const ProbMatrix& teacher_probs,
                       const NormalizedAdjacency* adj, const std::vector<NodeId>& train_idx);

// alpha * CE(rows intersect train) + (1 - alpha) * KL-term. InvKD and the
// convolution ablation push softmax(logits) through their operator and
// renormalize before the KL; floored entries get zero gradient.
LossResult distill_loss(const DistillConfig& cfg, const DenseMatrix& student_logits,
                        const ProbMatrix& target, const NormalizedAdjacency* adj,
                        const std::vector<NodeId>& rows, const std::vector<int>& labels,
                        const std::vector<NodeId>& train_idx);

// Argmax accuracy; ties resolve to the lowest class id.
double evaluate(const DenseMatrix& logits, const std::vector<int>& labels,
                const std::vector<NodeId>& idx);
double evaluate(const MlpModel& model, const SparseFeatures& x, const std::vector<int>& labels,
                const std::vector<NodeId>& idx);

struct StudentConfig {
    std::vector<std::int64_t> hidden_dims{128};
    double lr = 0.01;
    double weight_decay = 0.0;
    double dropout = 0.0;
    int patience = 50;
    int max_epochs = 300;
    int batch_size = 0;  // 0 = full batch
};

struct EpochRecord {
    int epoch;
    double loss;
    double val_acc;
    double energy;  // tr(f(X)^T L f(X)) of the eval-mode logits
};

struct StudentResult {
    MlpModel model;
    std::vector<EpochRecord> history;
    int best_epoch = -1;
    double best_val_acc = 0.0;
    double test_obs_acc = 0.0;
    std::optional<double> test_ind_acc;
};

struct DistillInputs {
    const SparseFeatures* features = nullptr;
    const ProbMatrix* teacher_probs = nullptr;  // may be null for pure-CE runs
    const NormalizedAdjacency* adj = nullptr;
    const std::vector<int>* labels = nullptr;
    const Split* split = nullptr;
    bool inductive = false;  // restricts the KL rows to V_T and U_obs
};

// Trains a student MLP under the given distillation objective with early
// stopping on validation accuracy. Fully deterministic per seed.
StudentResult train_student(const DistillInputs& in, const DistillConfig& distill,
                            const StudentConfig& cfg, std::uint64_t seed);

// The no-distillation baseline: CE on the training rows only.
StudentResult train_plain_mlp(const DistillInputs& in, const StudentConfig& cfg,
                              std::uint64_t seed);

}  // namespace pnd
