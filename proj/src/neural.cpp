#include "pnd/neural.hpp"

#include <algorithm>
#include <cmath>

#include "pnd/errors.hpp"

namespace pnd {

MlpModel make_mlp(const std::vector<std::int64_t>& dims, double dropout_rate, RngStream& rng) {
    if (dims.size() < 2) throw InputError("make_mlp: need at least in and out dims");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) {
        throw InputError("make_mlp: dropout must be in [0, 1)");
    }
    MlpModel m;
    m.dropout_rate = dropout_rate;
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        LinearLayer layer;
        layer.weight = DenseMatrix(dims[l], dims[l + 1]);
        const double bound = std::sqrt(6.0 / static_cast<double>(dims[l] + dims[l + 1]));
        for (double& w : layer.weight.values) w = rng.uniform(-bound, bound);
        layer.bias.assign(static_cast<std::size_t>(dims[l + 1]), 0.0);
        m.layers.push_back(std::move(layer));
    }
    return m;
}

namespace {

void add_bias(DenseMatrix& z, const std::vector<double>& bias) {
    for (std::int64_t i = 0; i < z.rows; ++i) {
        double* r = z.row(i);
        for (std::int64_t j = 0; j < z.cols; ++j) r[j] += bias[static_cast<std::size_t>(j)];
    }
}

}  // namespace

DenseMatrix mlp_forward(const MlpModel& model, const SparseFeatures& x, bool train_mode,
                        RngStream& rng, ForwardCache* cache) {
    if (x.cols != model.in_dim()) throw InputError("mlp_forward: input dim mismatch");
    if (cache) {
        cache->pre_act.clear();
        cache->hidden.clear();
        cache->dropout_scale.clear();
        cache->input = &x;
        cache->train_mode = train_mode;
    }
    const std::size_t num_layers = model.layers.size();
    const bool use_dropout = train_mode && model.dropout_rate > 0.0;
    const double keep = 1.0 - model.dropout_rate;

    DenseMatrix h;  // dense activations after the first layer
    for (std::size_t l = 0; l < num_layers; ++l) {
        DenseMatrix z = (l == 0) ? spmm(x, model.layers[l].weight)
                                 : matmul(h, model.layers[l].weight);
        add_bias(z, model.layers[l].bias);
        if (l + 1 == num_layers) return z;  // logits

        if (cache) cache->pre_act.push_back(z);
        for (double& v : z.values) v = v > 0.0 ? v : 0.0;
        if (use_dropout) {
            DenseMatrix scale(z.rows, z.cols);
            for (std::size_t k = 0; k < z.values.size(); ++k) {
                const double s = rng.uniform() < model.dropout_rate ? 0.0 : 1.0 / keep;
                scale.values[k] = s;
                z.values[k] *= s;
            }
            if (cache) cache->dropout_scale.push_back(std::move(scale));
        }
        if (cache) cache->hidden.push_back(z);
        h = std::move(z);
    }
    throw InputError("mlp_forward: model has no layers");
}

DenseMatrix mlp_forward(const MlpModel& model, const DenseMatrix& x, bool train_mode,
                        RngStream& rng, ForwardCache* cache) {
    if (cache) {
        cache->owned_input = SparseFeatures::from_dense(x);
        return mlp_forward(model, cache->owned_input, train_mode, rng, cache);
    }
    const SparseFeatures view = SparseFeatures::from_dense(x);
    return mlp_forward(model, view, train_mode, rng, nullptr);
}

Gradients backprop(const MlpModel& model, const ForwardCache& cache,
                   const DenseMatrix& grad_logits) {
    const std::size_t num_layers = model.layers.size();
    if (!cache.input) throw InputError("backprop: cache missing input");
    if (grad_logits.cols != model.out_dim() || grad_logits.rows != cache.input->rows) {
        throw InputError("backprop: grad_logits shape mismatch");
    }
    if (cache.pre_act.size() + 1 != num_layers) {
        throw InputError("backprop: cache does not match model depth");
    }

    Gradients g;
    g.weight.resize(num_layers);
    g.bias.resize(num_layers);

    DenseMatrix dz = grad_logits;
    for (std::size_t l = num_layers; l-- > 0;) {
        // Weight and bias gradients from this layer's input.
        if (l == 0) {
            g.weight[0] = spmm_xt_d(*cache.input, dz);
        } else {
            g.weight[l] = matmul_at_b(cache.hidden[l - 1], dz);
        }
        g.bias[l].assign(static_cast<std::size_t>(dz.cols), 0.0);
        for (std::int64_t i = 0; i < dz.rows; ++i) {
            const double* r = dz.row(i);
            for (std::int64_t j = 0; j < dz.cols; ++j) g.bias[l][static_cast<std::size_t>(j)] += r[j];
        }
        if (l == 0) break;

        DenseMatrix dh = matmul_a_bt(dz, model.layers[l].weight);
        if (!cache.dropout_scale.empty()) {
            const DenseMatrix& scale = cache.dropout_scale[l - 1];
            for (std::size_t k = 0; k < dh.values.size(); ++k) dh.values[k] *= scale.values[k];
        }
        const DenseMatrix& pre = cache.pre_act[l - 1];
        for (std::size_t k = 0; k < dh.values.size(); ++k) {
            if (pre.values[k] <= 0.0) dh.values[k] = 0.0;
        }
        dz = std::move(dh);
    }
    return g;
}

DenseMatrix softmax_rows(const DenseMatrix& logits) {
    DenseMatrix out(logits.rows, logits.cols);
    for (std::int64_t i = 0; i < logits.rows; ++i) {
        const double* src = logits.row(i);
        double* dst = out.row(i);
        double mx = src[0];
        for (std::int64_t j = 1; j < logits.cols; ++j) mx = std::max(mx, src[j]);
        double sum = 0.0;
        for (std::int64_t j = 0; j < logits.cols; ++j) {
            dst[j] = std::exp(src[j] - mx);
            sum += dst[j];
        }
        const double inv = 1.0 / sum;
        for (std::int64_t j = 0; j < logits.cols; ++j) dst[j] *= inv;
    }
    return out;
}

DenseMatrix log_softmax_rows(const DenseMatrix& logits) {
    DenseMatrix out(logits.rows, logits.cols);
    for (std::int64_t i = 0; i < logits.rows; ++i) {
        const double* src = logits.row(i);
        double* dst = out.row(i);
        double mx = src[0];
        for (std::int64_t j = 1; j < logits.cols; ++j) mx = std::max(mx, src[j]);
        double sum = 0.0;
        for (std::int64_t j = 0; j < logits.cols; ++j) sum += std::exp(src[j] - mx);
        const double lse = mx + std::log(sum);
        for (std::int64_t j = 0; j < logits.cols; ++j) dst[j] = src[j] - lse;
    }
    return out;
}

LossResult kl_loss(const DenseMatrix& logits, const ProbMatrix& target,
                   const std::vector<NodeId>& rows) {
    if (!logits.same_shape(target.values)) throw InputError("kl_loss: shape mismatch");
    if (rows.empty()) throw InputError("kl_loss: empty row set");
    LossResult res;
    res.grad_logits = DenseMatrix(logits.rows, logits.cols);
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    const DenseMatrix lsm = log_softmax_rows(logits);
    double loss = 0.0;
    for (NodeId i : rows) {
        if (i < 0 || i >= logits.rows) throw InputError("kl_loss: row index out of range");
        const double* t = target.values.row(i);
        const double* ls = lsm.row(i);
        double* g = res.grad_logits.row(i);
        double row_dot = 0.0;  // sum_c t_c, for the softmax gradient
        for (std::int64_t c = 0; c < logits.cols; ++c) {
            if (t[c] > 0.0) loss += t[c] * (std::log(t[c]) - ls[c]);
            row_dot += t[c];
        }
        // grad = (softmax - target) / |rows|; row_dot guards non-unit rows.
        for (std::int64_t c = 0; c < logits.cols; ++c) {
            g[c] = (std::exp(ls[c]) * row_dot - t[c]) * inv_n;
        }
    }
    res.loss = loss * inv_n;
    return res;
}

LossResult ce_loss(const DenseMatrix& logits, const std::vector<int>& labels,
                   const std::vector<NodeId>& rows) {
    if (static_cast<std::int64_t>(labels.size()) != logits.rows) {
        throw InputError("ce_loss: labels length mismatch");
    }
    if (rows.empty()) throw InputError("ce_loss: empty row set");
    LossResult res;
    res.grad_logits = DenseMatrix(logits.rows, logits.cols);
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    const DenseMatrix lsm = log_softmax_rows(logits);
    double loss = 0.0;
    for (NodeId i : rows) {
        if (i < 0 || i >= logits.rows) throw InputError("ce_loss: row index out of range");
        const int y = labels[static_cast<std::size_t>(i)];
        if (y < 0 || y >= logits.cols) throw InputError("ce_loss: label out of range");
        const double* ls = lsm.row(i);
        double* g = res.grad_logits.row(i);
        loss -= ls[y];
        for (std::int64_t c = 0; c < logits.cols; ++c) g[c] = std::exp(ls[c]) * inv_n;
        g[y] -= inv_n;
    }
    res.loss = loss * inv_n;
    return res;
}

void adam_step(std::vector<std::span<double>> params,
               std::vector<std::span<const double>> grads, AdamState& state) {
    if (params.size() != grads.size()) throw InputError("adam_step: block count mismatch");
    if (state.first_moment.empty()) {
        state.first_moment.resize(params.size());
        state.second_moment.resize(params.size());
        for (std::size_t b = 0; b < params.size(); ++b) {
            state.first_moment[b].assign(params[b].size(), 0.0);
            state.second_moment[b].assign(params[b].size(), 0.0);
        }
    }
    state.step_count++;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t b = 0; b < params.size(); ++b) {
        if (params[b].size() != grads[b].size() ||
            params[b].size() != state.first_moment[b].size()) {
            throw InputError("adam_step: block shape mismatch");
        }
        auto& m = state.first_moment[b];
        auto& v = state.second_moment[b];
        for (std::size_t k = 0; k < params[b].size(); ++k) {
            const double g = grads[b][k] + state.weight_decay * params[b][k];
            m[k] = state.beta1 * m[k] + (1.0 - state.beta1) * g;
            v[k] = state.beta2 * v[k] + (1.0 - state.beta2) * g * g;
            const double mhat = m[k] / bc1;
            const double vhat = v[k] / bc2;
            params[b][k] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
        }
    }
}

std::vector<std::span<double>> collect_params(MlpModel& model) {
    std::vector<std::span<double>> out;
    for (auto& layer : model.layers) {
        out.emplace_back(layer.weight.values);
        out.emplace_back(layer.bias);
    }
    return out;
}

std::vector<std::span<const double>> collect_grads(const Gradients& g) {
    std::vector<std::span<const double>> out;
    for (std::size_t l = 0; l < g.weight.size(); ++l) {
        out.emplace_back(g.weight[l].values);
        out.emplace_back(g.bias[l]);
    }
    return out;
}

double grad_check(MlpModel& model, const SparseFeatures& x,
                  const std::function<LossResult(const DenseMatrix&)>& loss,
                  RngStream& rng, int max_params, double h) {
    RngStream fwd_rng(0);  // dropout off: stream content irrelevant
    ForwardCache cache;
    const DenseMatrix logits = mlp_forward(model, x, /*train_mode=*/false, fwd_rng, &cache);
    const LossResult base = loss(logits);
    const Gradients analytic = backprop(model, cache, base.grad_logits);

    auto params = collect_params(model);
    auto agrads = collect_grads(analytic);
    std::int64_t total = 0;
    for (const auto& p : params) total += static_cast<std::int64_t>(p.size());

    double max_rel = 0.0;
    const int samples = static_cast<int>(std::min<std::int64_t>(max_params, total));
    for (int s = 0; s < samples; ++s) {
        const std::int64_t flat = static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(total)));
        std::size_t b = 0;
        std::int64_t off = flat;
        while (off >= static_cast<std::int64_t>(params[b].size())) {
            off -= static_cast<std::int64_t>(params[b].size());
            ++b;
        }
        double& p = params[b][static_cast<std::size_t>(off)];
        const double orig = p;
        p = orig + h;
        const double lp = loss(mlp_forward(model, x, false, fwd_rng)).loss;
        p = orig - h;
        const double lm = loss(mlp_forward(model, x, false, fwd_rng)).loss;
        p = orig;
        const double fd = (lp - lm) / (2.0 * h);
        const double an = agrads[b][static_cast<std::size_t>(off)];
        const double rel = std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-4});
        max_rel = std::max(max_rel, rel);
    }
    return max_rel;
}

}  // namespace pnd
