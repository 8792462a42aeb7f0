#include "pnd/distill.hpp"

#include <algorithm>
#include <cmath>

#include "pnd/errors.hpp"

namespace pnd {

const char* variant_name(DistillVariant v) {
    switch (v) {
        case DistillVariant::GLNN: return "glnn";
        case DistillVariant::InvKD: return "invkd";
        case DistillVariant::PND: return "pnd";
        case DistillVariant::PND_FIX: return "pnd_fix";
        case DistillVariant::CONV_ABLATION: return "conv";
    }
    return "?";
}

DistillVariant variant_from_name(const std::string& name) {
    if (name == "glnn") return DistillVariant::GLNN;
    if (name == "invkd") return DistillVariant::InvKD;
    if (name == "pnd") return DistillVariant::PND;
    if (name == "pnd_fix" || name == "pnd-fix") return DistillVariant::PND_FIX;
    if (name == "conv") return DistillVariant::CONV_ABLATION;
    throw ConfigError("unknown distillation variant: " + name);
}

void DistillConfig::validate() const {
    if (alpha < 0.0 || alpha > 1.0) throw ConfigError("DistillConfig: alpha must be in [0, 1]");
    const bool needs_gamma = variant != DistillVariant::GLNN;
    if (needs_gamma && !(gamma > 0.0)) {
        throw ConfigError("DistillConfig: gamma required for this variant");
    }
    if ((variant == DistillVariant::PND || variant == DistillVariant::PND_FIX) && iterations < 1) {
        throw ConfigError("DistillConfig: iterations required for propagating variants");
    }
    if (!(floor_value > 0.0)) throw ConfigError("DistillConfig: floor must be positive");
}

ProbMatrix make_target(const DistillConfig& cfg, const ProbMatrix& teacher_probs,
                       const NormalizedAdjacency* adj, const std::vector<NodeId>& train_idx) {
    cfg.validate();
    switch (cfg.variant) {
        case DistillVariant::GLNN:
        case DistillVariant::InvKD:
        case DistillVariant::CONV_ABLATION:
            return teacher_probs;
        case DistillVariant::PND: {
            if (!adj) throw ConfigError("make_target: PND needs the normalized adjacency");
            PropagationConfig pc{cfg.gamma, cfg.iterations, cfg.floor_value};
            return normalize_rows(propagate_pnd(teacher_probs.values, *adj, pc), cfg.floor_value);
        }
        case DistillVariant::PND_FIX: {
            if (!adj) throw ConfigError("make_target: PND_FIX needs the normalized adjacency");
            PropagationConfig pc{cfg.gamma, cfg.iterations, cfg.floor_value};
            ProbMatrix t = normalize_rows(
                propagate_pnd_fix(teacher_probs.values, *adj, pc, train_idx), cfg.floor_value);
            for (NodeId i : train_idx) {
                const double* src = teacher_probs.values.row(i);
                double* dst = t.values.row(i);
                for (std::int64_t c = 0; c < t.cols(); ++c) dst[c] = src[c];
            }
            return t;
        }
    }
    throw ConfigError("make_target: unreachable");
}

namespace {

// KL(normalize_rows(B softmax(logits)), Q) with analytic gradients through
// the linear operator; entries at or below the floor get zero gradient.
// apply_b must compute B * m for a symmetric B.
template <typename ApplyB>
LossResult operator_kl_loss(const DenseMatrix& logits, const ProbMatrix& q_target,
                            const std::vector<NodeId>& rows, double floor_value,
                            ApplyB&& apply_b) {
    if (rows.empty()) throw InputError("operator_kl_loss: empty row set");
    const std::int64_t n = logits.rows;
    const std::int64_t y = logits.cols;
    const double inv_n = 1.0 / static_cast<double>(rows.size());

    const DenseMatrix s = softmax_rows(logits);
    const DenseMatrix m = apply_b(s);
    const ProbMatrix r = normalize_rows(m, floor_value);

    double loss = 0.0;
    DenseMatrix dr(n, y);
    for (NodeId i : rows) {
        const double* rr = r.values.row(i);
        const double* qq = q_target.values.row(i);
        double* g = dr.row(i);
        for (std::int64_t c = 0; c < y; ++c) {
            const double lr_ = std::log(rr[c]);
            const double lq = std::log(qq[c]);
            loss += rr[c] * (lr_ - lq);
            g[c] = (lr_ - lq + 1.0) * inv_n;
        }
    }
    loss *= inv_n;

    // Through the row normalization: dC = (dR - <dR, R>) / rowsum(C).
    DenseMatrix dm(n, y);
    for (std::int64_t i = 0; i < n; ++i) {
        const double* rr = r.values.row(i);
        const double* g = dr.row(i);
        const double* mm = m.row(i);
        double rowsum = 0.0;
        for (std::int64_t c = 0; c < y; ++c) {
            rowsum += (mm[c] > floor_value ? mm[c] : floor_value);
        }
        double dot = 0.0;
        for (std::int64_t c = 0; c < y; ++c) dot += g[c] * rr[c];
        double* out = dm.row(i);
        for (std::int64_t c = 0; c < y; ++c) {
            // Stop-gradient at floored entries.
            out[c] = (mm[c] > floor_value) ? (g[c] - dot) / rowsum : 0.0;
        }
    }

    // B is symmetric, so grad wrt S is B * dm.
    const DenseMatrix ds = apply_b(dm);

    LossResult res;
    res.loss = loss;
    res.grad_logits = DenseMatrix(n, y);
    for (std::int64_t i = 0; i < n; ++i) {
        const double* ss = s.row(i);
        const double* dd = ds.row(i);
        double* out = res.grad_logits.row(i);
        double dot = 0.0;
        for (std::int64_t c = 0; c < y; ++c) dot += dd[c] * ss[c];
        for (std::int64_t c = 0; c < y; ++c) out[c] = ss[c] * (dd[c] - dot);
    }
    return res;
}

std::vector<NodeId> sorted_intersection(const std::vector<NodeId>& a,
                                        const std::vector<NodeId>& b) {
    std::vector<NodeId> sa = a;
    std::vector<NodeId> sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    std::vector<NodeId> out;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(out));
    return out;
}

}  // namespace

LossResult distill_loss(const DistillConfig& cfg, const DenseMatrix& student_logits,
                        const ProbMatrix& target, const NormalizedAdjacency* adj,
                        const std::vector<NodeId>& rows, const std::vector<int>& labels,
                        const std::vector<NodeId>& train_idx) {
    cfg.validate();
    if (rows.empty()) throw InputError("distill_loss: empty row set");

    LossResult kl_part;
    if (cfg.alpha < 1.0) {
        switch (cfg.variant) {
            case DistillVariant::GLNN:
            case DistillVariant::PND:
            case DistillVariant::PND_FIX:
                kl_part = kl_loss(student_logits, target, rows);
                break;
            case DistillVariant::InvKD: {
                if (!adj) throw ConfigError("distill_loss: InvKD needs the normalized adjacency");
                const ProbMatrix q = normalize_rows(target.values, cfg.floor_value);
                kl_part = operator_kl_loss(
                    student_logits, q, rows, cfg.floor_value,
                    [&](const DenseMatrix& m) { return inverse_propagate(m, *adj, cfg.gamma); });
                break;
            }
            case DistillVariant::CONV_ABLATION: {
                if (!adj) throw ConfigError("distill_loss: conv ablation needs the adjacency");
                const ProbMatrix q = normalize_rows(target.values, cfg.floor_value);
                kl_part = operator_kl_loss(
                    student_logits, q, rows, cfg.floor_value,
                    [&](const DenseMatrix& m) { return apply_operator(*adj, m); });
                break;
            }
        }
    } else {
        kl_part.grad_logits = DenseMatrix(student_logits.rows, student_logits.cols);
    }

    if (cfg.alpha == 0.0) return kl_part;

    const std::vector<NodeId> ce_rows = sorted_intersection(rows, train_idx);
    LossResult res;
    res.grad_logits = DenseMatrix(student_logits.rows, student_logits.cols);
    if (!ce_rows.empty()) {
        const LossResult ce_part = ce_loss(student_logits, labels, ce_rows);
        res.loss = cfg.alpha * ce_part.loss + (1.0 - cfg.alpha) * kl_part.loss;
        for (std::size_t k = 0; k < res.grad_logits.values.size(); ++k) {
            res.grad_logits.values[k] = cfg.alpha * ce_part.grad_logits.values[k] +
                                        (1.0 - cfg.alpha) * kl_part.grad_logits.values[k];
        }
    } else {
        res.loss = (1.0 - cfg.alpha) * kl_part.loss;
        for (std::size_t k = 0; k < res.grad_logits.values.size(); ++k) {
            res.grad_logits.values[k] = (1.0 - cfg.alpha) * kl_part.grad_logits.values[k];
        }
    }
    return res;
}

double evaluate(const DenseMatrix& logits, const std::vector<int>& labels,
                const std::vector<NodeId>& idx) {
    if (idx.empty()) throw InputError("evaluate: empty index set");
    std::int64_t correct = 0;
    for (NodeId i : idx) {
        if (i < 0 || i >= logits.rows) throw InputError("evaluate: index out of range");
        const double* r = logits.row(i);
        int arg = 0;
        for (std::int64_t c = 1; c < logits.cols; ++c) {
            if (r[c] > r[arg]) arg = static_cast<int>(c);  // ties keep the lowest class
        }
        if (arg == labels[static_cast<std::size_t>(i)]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(idx.size());
}

double evaluate(const MlpModel& model, const SparseFeatures& x, const std::vector<int>& labels,
                const std::vector<NodeId>& idx) {
    RngStream rng(0);
    return evaluate(mlp_forward(model, x, false, rng), labels, idx);
}

namespace {

struct LossProvider {
    // Returns loss and grad for the given epoch's logits over `rows`.
    virtual LossResult operator()(const DenseMatrix& logits, const std::vector<NodeId>& rows) = 0;
    virtual ~LossProvider() = default;
};

StudentResult train_student_core(const DistillInputs& in, const StudentConfig& cfg,
                                 std::uint64_t seed, const std::vector<NodeId>& loss_rows,
                                 LossProvider& loss) {
    if (!in.features || !in.labels || !in.split) {
        throw ConfigError("train_student: missing inputs");
    }
    const SparseFeatures& x = *in.features;
    const std::vector<int>& labels = *in.labels;
    const Split& split = *in.split;
    const int num_classes = 1 + *std::max_element(labels.begin(), labels.end());

    RngStream rng(seed, /*stream=*/0x57d);
    std::vector<std::int64_t> dims;
    dims.push_back(x.cols);
    for (auto d : cfg.hidden_dims) dims.push_back(d);
    dims.push_back(num_classes);
    MlpModel model = make_mlp(dims, cfg.dropout, rng);

    AdamState adam;
    adam.lr = cfg.lr;
    adam.weight_decay = cfg.weight_decay;

    StudentResult out;
    MlpModel best = model;
    double best_val = -1.0;
    int since_improve = 0;

    const bool reuse_train_logits = cfg.dropout == 0.0 && cfg.batch_size == 0;
    std::vector<NodeId> order = loss_rows;
    ForwardCache cache;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        DenseMatrix logits;
        double epoch_loss = 0.0;
        if (cfg.batch_size == 0) {
            logits = mlp_forward(model, x, true, rng, &cache);
            const LossResult res = loss(logits, loss_rows);
            epoch_loss = res.loss;
            const Gradients grads = backprop(model, cache, res.grad_logits);
            adam_step(collect_params(model), collect_grads(grads), adam);
        } else {
            rng.shuffle(order);
            std::size_t done = 0;
            std::int64_t batches = 0;
            while (done < order.size()) {
                const std::size_t take =
                    std::min<std::size_t>(static_cast<std::size_t>(cfg.batch_size),
                                          order.size() - done);
                std::vector<NodeId> batch(order.begin() + static_cast<std::ptrdiff_t>(done),
                                          order.begin() + static_cast<std::ptrdiff_t>(done + take));
                std::sort(batch.begin(), batch.end());
                DenseMatrix blogits = mlp_forward(model, x, true, rng, &cache);
                const LossResult res = loss(blogits, batch);
                epoch_loss += res.loss;
                ++batches;
                const Gradients grads = backprop(model, cache, res.grad_logits);
                adam_step(collect_params(model), collect_grads(grads), adam);
                done += take;
            }
            epoch_loss /= static_cast<double>(std::max<std::int64_t>(1, batches));
        }

        DenseMatrix eval_logits =
            reuse_train_logits ? std::move(logits) : mlp_forward(model, x, false, rng);
        const double val_acc = split.val.empty() ? 0.0 : evaluate(eval_logits, labels, split.val);
        const double energy = in.adj ? dirichlet_energy(eval_logits, *in.adj) : 0.0;
        out.history.push_back(EpochRecord{epoch, epoch_loss, val_acc, energy});

        if (val_acc > best_val) {
            best_val = val_acc;
            best = model;
            out.best_epoch = epoch;
            since_improve = 0;
        } else if (++since_improve >= cfg.patience) {
            break;
        }
    }

    out.model = std::move(best);
    out.best_val_acc = best_val;
    RngStream eval_rng(0);
    const DenseMatrix final_logits = mlp_forward(out.model, x, false, eval_rng);
    if (!split.test_obs.empty()) out.test_obs_acc = evaluate(final_logits, labels, split.test_obs);
    if (!split.test_ind.empty()) {
        out.test_ind_acc = evaluate(final_logits, labels, split.test_ind);
    }
    return out;
}

std::vector<NodeId> visible_rows(const DistillInputs& in) {
    const Split& split = *in.split;
    std::vector<NodeId> rows;
    if (in.inductive) {
        rows.insert(rows.end(), split.train.begin(), split.train.end());
        rows.insert(rows.end(), split.val.begin(), split.val.end());
        rows.insert(rows.end(), split.test_obs.begin(), split.test_obs.end());
        std::sort(rows.begin(), rows.end());
    } else {
        rows.resize(static_cast<std::size_t>(in.features->rows));
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<NodeId>(i);
    }
    return rows;
}

}  // namespace

StudentResult train_student(const DistillInputs& in, const DistillConfig& distill,
                            const StudentConfig& cfg, std::uint64_t seed) {
    distill.validate();
    if (!in.teacher_probs) throw ConfigError("train_student: missing teacher probabilities");
    if (!in.split) throw ConfigError("train_student: missing split");

    const ProbMatrix target = make_target(distill, *in.teacher_probs, in.adj, in.split->train);
    struct Provider final : LossProvider {
        const DistillConfig* cfg;
        const ProbMatrix* target;
        const NormalizedAdjacency* adj;
        const std::vector<int>* labels;
        const std::vector<NodeId>* train_idx;
        LossResult operator()(const DenseMatrix& logits, const std::vector<NodeId>& rows) override {
            return distill_loss(*cfg, logits, *target, adj, rows, *labels, *train_idx);
        }
    } provider;
    provider.cfg = &distill;
    provider.target = &target;
    provider.adj = in.adj;
    provider.labels = in.labels;
    provider.train_idx = &in.split->train;

    return train_student_core(in, cfg, seed, visible_rows(in), provider);
}

StudentResult train_plain_mlp(const DistillInputs& in, const StudentConfig& cfg,
                              std::uint64_t seed) {
    if (!in.split) throw ConfigError("train_plain_mlp: missing split");
    struct Provider final : LossProvider {
        const std::vector<int>* labels;
        LossResult operator()(const DenseMatrix& logits, const std::vector<NodeId>& rows) override {
            return ce_loss(logits, *labels, rows);
        }
    } provider;
    provider.labels = in.labels;
    return train_student_core(in, cfg, seed, in.split->train, provider);
}

}  // namespace pnd
