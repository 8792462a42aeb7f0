#include "pnd/teacher.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "pnd/distill.hpp"
#include "pnd/errors.hpp"

namespace pnd {

SageModel make_sage(std::int64_t in_dim, std::int64_t hidden_dim, std::int64_t out_dim,
                    double dropout_rate, RngStream& rng) {
    auto init = [&rng](std::int64_t in, std::int64_t out) {
        DenseMatrix w(in, out);
        const double bound = std::sqrt(6.0 / static_cast<double>(in + out));
        for (double& v : w.values) v = rng.uniform(-bound, bound);
        return w;
    };
    SageModel m;
    m.dropout_rate = dropout_rate;
    m.l1.w_self = init(in_dim, hidden_dim);
    m.l1.w_nbr = init(in_dim, hidden_dim);
    m.l1.bias.assign(static_cast<std::size_t>(hidden_dim), 0.0);
    m.l2.w_self = init(hidden_dim, out_dim);
    m.l2.w_nbr = init(hidden_dim, out_dim);
    m.l2.bias.assign(static_cast<std::size_t>(out_dim), 0.0);
    return m;
}

DenseMatrix mean_aggregate(const SparseGraph& g, const DenseMatrix& m) {
    if (g.num_nodes != m.rows) throw InputError("mean_aggregate: shape mismatch");
    DenseMatrix out(m.rows, m.cols);
    for (std::int64_t i = 0; i < g.num_nodes; ++i) {
        const std::int64_t deg = g.degrees[static_cast<std::size_t>(i)];
        if (deg == 0) continue;
        double* dst = out.row(i);
        for (std::int64_t k = g.row_ptr[static_cast<std::size_t>(i)];
             k < g.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            const double* src = m.row(g.col_idx[static_cast<std::size_t>(k)]);
            for (std::int64_t c = 0; c < m.cols; ++c) dst[c] += src[c];
        }
        const double inv = 1.0 / static_cast<double>(deg);
        for (std::int64_t c = 0; c < m.cols; ++c) dst[c] *= inv;
    }
    return out;
}

SparseFeatures mean_aggregate(const SparseGraph& g, const SparseFeatures& m) {
    if (g.num_nodes != m.rows) throw InputError("mean_aggregate: shape mismatch");
    SparseFeatures out;
    out.rows = m.rows;
    out.cols = m.cols;
    out.row_ptr.assign(static_cast<std::size_t>(m.rows) + 1, 0);
    std::vector<double> acc(static_cast<std::size_t>(m.cols), 0.0);
    std::vector<std::int32_t> touched;
    for (std::int64_t i = 0; i < g.num_nodes; ++i) {
        const std::int64_t deg = g.degrees[static_cast<std::size_t>(i)];
        if (deg > 0) {
            touched.clear();
            for (std::int64_t k = g.row_ptr[static_cast<std::size_t>(i)];
                 k < g.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
                const NodeId j = g.col_idx[static_cast<std::size_t>(k)];
                for (std::int64_t e = m.row_ptr[static_cast<std::size_t>(j)];
                     e < m.row_ptr[static_cast<std::size_t>(j) + 1]; ++e) {
                    const std::int32_t c = m.col[static_cast<std::size_t>(e)];
                    if (acc[static_cast<std::size_t>(c)] == 0.0) touched.push_back(c);
                    acc[static_cast<std::size_t>(c)] += m.val[static_cast<std::size_t>(e)];
                }
            }
            std::sort(touched.begin(), touched.end());
            const double inv = 1.0 / static_cast<double>(deg);
            for (std::int32_t c : touched) {
                const double v = acc[static_cast<std::size_t>(c)];
                if (v != 0.0) {
                    out.col.push_back(c);
                    out.val.push_back(v * inv);
                }
                acc[static_cast<std::size_t>(c)] = 0.0;
            }
        }
        out.row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<std::int64_t>(out.col.size());
    }
    return out;
}

DenseMatrix mean_aggregate_transpose(const SparseGraph& g, const DenseMatrix& m) {
    if (g.num_nodes != m.rows) throw InputError("mean_aggregate_transpose: shape mismatch");
    DenseMatrix out(m.rows, m.cols);
    for (std::int64_t i = 0; i < g.num_nodes; ++i) {
        const std::int64_t deg = g.degrees[static_cast<std::size_t>(i)];
        if (deg == 0) continue;
        const double inv = 1.0 / static_cast<double>(deg);
        const double* src = m.row(i);
        for (std::int64_t k = g.row_ptr[static_cast<std::size_t>(i)];
             k < g.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
            double* dst = out.row(g.col_idx[static_cast<std::size_t>(k)]);
            for (std::int64_t c = 0; c < m.cols; ++c) dst[c] += inv * src[c];
        }
    }
    return out;
}

namespace {

std::vector<std::vector<NodeId>> sample_neighbors(const SparseGraph& g, int fanout,
                                                  RngStream& rng) {
    std::vector<std::vector<NodeId>> lists(static_cast<std::size_t>(g.num_nodes));
    for (std::int64_t i = 0; i < g.num_nodes; ++i) {
        const std::int64_t deg = g.degrees[static_cast<std::size_t>(i)];
        if (deg == 0) continue;
        auto& lst = lists[static_cast<std::size_t>(i)];
        const std::int64_t begin = g.row_ptr[static_cast<std::size_t>(i)];
        if (deg <= fanout) {
            // Fill to fanout with replacement.
            for (int t = 0; t < fanout; ++t) {
                lst.push_back(g.col_idx[static_cast<std::size_t>(
                    begin + static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(deg))))]);
            }
        } else {
            // Without replacement via partial Fisher-Yates over a copy.
            std::vector<NodeId> pool(g.col_idx.begin() + begin,
                                     g.col_idx.begin() + begin + deg);
            for (int t = 0; t < fanout; ++t) {
                const std::size_t j = static_cast<std::size_t>(t) + static_cast<std::size_t>(rng.uniform_int(
                                          static_cast<std::uint64_t>(deg - t)));
                std::swap(pool[static_cast<std::size_t>(t)], pool[j]);
                lst.push_back(pool[static_cast<std::size_t>(t)]);
            }
        }
    }
    return lists;
}

DenseMatrix sampled_mean_dense(const std::vector<std::vector<NodeId>>& lists,
                               const DenseMatrix& m) {
    DenseMatrix out(m.rows, m.cols);
    for (std::int64_t i = 0; i < m.rows; ++i) {
        const auto& lst = lists[static_cast<std::size_t>(i)];
        if (lst.empty()) continue;
        double* dst = out.row(i);
        for (NodeId j : lst) {
            const double* src = m.row(j);
            for (std::int64_t c = 0; c < m.cols; ++c) dst[c] += src[c];
        }
        const double inv = 1.0 / static_cast<double>(lst.size());
        for (std::int64_t c = 0; c < m.cols; ++c) dst[c] *= inv;
    }
    return out;
}

DenseMatrix sampled_mean_transpose(const std::vector<std::vector<NodeId>>& lists,
                                   const DenseMatrix& m) {
    DenseMatrix out(m.rows, m.cols);
    for (std::int64_t i = 0; i < m.rows; ++i) {
        const auto& lst = lists[static_cast<std::size_t>(i)];
        if (lst.empty()) continue;
        const double inv = 1.0 / static_cast<double>(lst.size());
        const double* src = m.row(i);
        for (NodeId j : lst) {
            double* dst = out.row(j);
            for (std::int64_t c = 0; c < m.cols; ++c) dst[c] += inv * src[c];
        }
    }
    return out;
}

SparseFeatures sampled_mean_sparse(const std::vector<std::vector<NodeId>>& lists,
                                   const SparseFeatures& m) {
    DenseMatrix tmp(m.rows, m.cols);
    for (std::int64_t i = 0; i < m.rows; ++i) {
        const auto& lst = lists[static_cast<std::size_t>(i)];
        if (lst.empty()) continue;
        double* dst = tmp.row(i);
        for (NodeId j : lst) {
            for (std::int64_t e = m.row_ptr[static_cast<std::size_t>(j)];
                 e < m.row_ptr[static_cast<std::size_t>(j) + 1]; ++e) {
                dst[m.col[static_cast<std::size_t>(e)]] += m.val[static_cast<std::size_t>(e)];
            }
        }
        const double inv = 1.0 / static_cast<double>(lst.size());
        for (std::int64_t c = 0; c < m.cols; ++c) dst[c] *= inv;
    }
    return SparseFeatures::from_dense(tmp);
}

void add_bias_rows(DenseMatrix& z, const std::vector<double>& bias) {
    for (std::int64_t i = 0; i < z.rows; ++i) {
        double* r = z.row(i);
        for (std::int64_t j = 0; j < z.cols; ++j) r[j] += bias[static_cast<std::size_t>(j)];
    }
}

}  // namespace

DenseMatrix sage_forward(const SageModel& model, const SparseGraph& g, const SparseFeatures& x,
                         const SparseFeatures& agg_x, bool train_mode, RngStream& rng,
                         SageCache* cache, const TeacherConfig* cfg) {
    if (x.rows != g.num_nodes) throw InputError("sage_forward: feature rows != num_nodes");
    if (x.cols != model.in_dim()) throw InputError("sage_forward: feature dim mismatch");

    const bool sample = cfg && cfg->use_fanout && train_mode;
    SageCache local;
    SageCache& c = cache ? *cache : local;
    c = SageCache{};
    c.x = &x;
    c.agg_x = &agg_x;
    c.sampled = sample;

    const SparseFeatures* l1_agg = &agg_x;
    SparseFeatures sampled_agg;
    if (sample) {
        c.sampled1 = sample_neighbors(g, cfg->fanout1, rng);
        c.sampled2 = sample_neighbors(g, cfg->fanout2, rng);
        sampled_agg = sampled_mean_sparse(c.sampled1, x);
        l1_agg = &sampled_agg;
    }

    DenseMatrix z1 = spmm(x, model.l1.w_self);
    {
        const DenseMatrix zn = spmm(*l1_agg, model.l1.w_nbr);
        for (std::size_t k = 0; k < z1.values.size(); ++k) z1.values[k] += zn.values[k];
    }
    add_bias_rows(z1, model.l1.bias);
    c.pre_act1 = z1;
    for (double& v : z1.values) v = v > 0.0 ? v : 0.0;

    const bool use_dropout = train_mode && model.dropout_rate > 0.0;
    if (use_dropout) {
        const double keep = 1.0 - model.dropout_rate;
        c.dropout_scale = DenseMatrix(z1.rows, z1.cols);
        for (std::size_t k = 0; k < z1.values.size(); ++k) {
            const double s = rng.uniform() < model.dropout_rate ? 0.0 : 1.0 / keep;
            c.dropout_scale.values[k] = s;
            z1.values[k] *= s;
        }
    }
    c.h1 = z1;

    c.agg_h1 = sample ? sampled_mean_dense(c.sampled2, c.h1) : mean_aggregate(g, c.h1);
    DenseMatrix logits = matmul(c.h1, model.l2.w_self);
    {
        const DenseMatrix zn = matmul(c.agg_h1, model.l2.w_nbr);
        for (std::size_t k = 0; k < logits.values.size(); ++k) logits.values[k] += zn.values[k];
    }
    add_bias_rows(logits, model.l2.bias);
    return logits;
}

SageGradients sage_backprop(const SageModel& model, const SparseGraph& g, const SageCache& cache,
                            const DenseMatrix& grad_logits) {
    if (!cache.x) throw InputError("sage_backprop: cache missing input");
    SageGradients grads;

    grads.l2.w_self = matmul_at_b(cache.h1, grad_logits);
    grads.l2.w_nbr = matmul_at_b(cache.agg_h1, grad_logits);
    grads.l2.bias.assign(static_cast<std::size_t>(grad_logits.cols), 0.0);
    for (std::int64_t i = 0; i < grad_logits.rows; ++i) {
        const double* r = grad_logits.row(i);
        for (std::int64_t j = 0; j < grad_logits.cols; ++j) {
            grads.l2.bias[static_cast<std::size_t>(j)] += r[j];
        }
    }

    DenseMatrix dh1 = matmul_a_bt(grad_logits, model.l2.w_self);
    {
        const DenseMatrix via_nbr = matmul_a_bt(grad_logits, model.l2.w_nbr);
        const DenseMatrix scattered = cache.sampled
                                          ? sampled_mean_transpose(cache.sampled2, via_nbr)
                                          : mean_aggregate_transpose(g, via_nbr);
        for (std::size_t k = 0; k < dh1.values.size(); ++k) dh1.values[k] += scattered.values[k];
    }
    if (cache.dropout_scale.rows > 0) {
        for (std::size_t k = 0; k < dh1.values.size(); ++k) {
            dh1.values[k] *= cache.dropout_scale.values[k];
        }
    }
    for (std::size_t k = 0; k < dh1.values.size(); ++k) {
        if (cache.pre_act1.values[k] <= 0.0) dh1.values[k] = 0.0;
    }

    grads.l1.w_self = spmm_xt_d(*cache.x, dh1);
    if (cache.sampled) {
        const SparseFeatures sampled_agg = sampled_mean_sparse(cache.sampled1, *cache.x);
        grads.l1.w_nbr = spmm_xt_d(sampled_agg, dh1);
    } else {
        grads.l1.w_nbr = spmm_xt_d(*cache.agg_x, dh1);
    }
    grads.l1.bias.assign(static_cast<std::size_t>(dh1.cols), 0.0);
    for (std::int64_t i = 0; i < dh1.rows; ++i) {
        const double* r = dh1.row(i);
        for (std::int64_t j = 0; j < dh1.cols; ++j) {
            grads.l1.bias[static_cast<std::size_t>(j)] += r[j];
        }
    }
    return grads;
}

std::vector<std::span<double>> collect_params(SageModel& model) {
    return {model.l1.w_self.values, model.l1.w_nbr.values, model.l1.bias,
            model.l2.w_self.values, model.l2.w_nbr.values, model.l2.bias};
}

std::vector<std::span<const double>> collect_grads(const SageGradients& g) {
    return {g.l1.w_self.values, g.l1.w_nbr.values, g.l1.bias,
            g.l2.w_self.values, g.l2.w_nbr.values, g.l2.bias};
}

TrainedTeacher train_teacher(const SparseGraph& g, const SparseFeatures& x,
                             const std::vector<int>& labels, const Split& split,
                             const TeacherConfig& cfg, RngStream& rng) {
    if (split.train.empty()) throw InputError("train_teacher: no training nodes");
    if (cfg.patience < 1) throw InputError("train_teacher: patience must be >= 1");
    const int num_classes = 1 + *std::max_element(labels.begin(), labels.end());

    SageModel model = make_sage(x.cols, cfg.hidden_dim, num_classes, cfg.dropout, rng);
    const SparseFeatures agg_x = mean_aggregate(g, x);

    AdamState adam;
    adam.lr = cfg.lr;
    adam.weight_decay = cfg.weight_decay;

    SageModel best = model;
    double best_val = -1.0;
    int best_epoch = -1;
    int since_improve = 0;
    TeacherMetrics metrics;

    const bool train_forward_reusable = cfg.dropout == 0.0 && !cfg.use_fanout;
    SageCache cache;
    for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        const DenseMatrix logits = sage_forward(model, g, x, agg_x, true, rng, &cache, &cfg);
        const LossResult res = ce_loss(logits, labels, split.train);
        const SageGradients grads = sage_backprop(model, g, cache, res.grad_logits);
        adam_step(collect_params(model), collect_grads(grads), adam);

        DenseMatrix eval_logits =
            train_forward_reusable ? logits : sage_forward(model, g, x, agg_x, false, rng);
        const double train_acc = evaluate(eval_logits, labels, split.train);
        const double val_acc = evaluate(eval_logits, labels, split.val);
        metrics.loss.push_back(res.loss);
        metrics.train_acc.push_back(train_acc);
        metrics.val_acc.push_back(val_acc);

        if (val_acc > best_val) {
            best_val = val_acc;
            best = model;
            best_epoch = epoch;
            since_improve = 0;
        } else if (++since_improve >= cfg.patience) {
            break;
        }
    }

    TrainedTeacher out;
    out.model = best;
    metrics.best_epoch = best_epoch;
    metrics.best_val_acc = best_val;
    const DenseMatrix final_logits = sage_forward(best, g, x, agg_x, false, rng);
    out.probs.values = softmax_rows(final_logits);
    metrics.test_obs_acc =
        split.test_obs.empty() ? 0.0 : evaluate(final_logits, labels, split.test_obs);
    if (!split.test_ind.empty()) {
        metrics.test_ind_acc = evaluate(final_logits, labels, split.test_ind);
    }
    out.metrics = std::move(metrics);
    return out;
}

namespace {

constexpr std::uint32_t kCheckpointVersion = 1;

void write_u32(std::ofstream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint32_t read_u32(std::ifstream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

void write_blob(std::ofstream& out, const std::vector<double>& v) {
    out.write(reinterpret_cast<const char*>(v.data()),
              static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_blob(std::ifstream& in, std::vector<double>& v) {
    in.read(reinterpret_cast<char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

}  // namespace

void save_teacher_checkpoint(const SageModel& model, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write checkpoint: " + path.string());
    out.write("PNDT", 4);
    write_u32(out, kCheckpointVersion);
    write_u32(out, static_cast<std::uint32_t>(model.in_dim()));
    write_u32(out, static_cast<std::uint32_t>(model.hidden_dim()));
    write_u32(out, static_cast<std::uint32_t>(model.out_dim()));
    write_blob(out, model.l1.w_self.values);
    write_blob(out, model.l1.w_nbr.values);
    write_blob(out, model.l1.bias);
    write_blob(out, model.l2.w_self.values);
    write_blob(out, model.l2.w_nbr.values);
    write_blob(out, model.l2.bias);
}

SageModel load_teacher_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LoadError("missing checkpoint: " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, "PNDT", 4) != 0) {
        throw LoadError("bad checkpoint magic in " + path.string());
    }
    const std::uint32_t version = read_u32(in);
    if (version != kCheckpointVersion) {
        throw LoadError("unsupported checkpoint version " + std::to_string(version));
    }
    const std::int64_t in_dim = read_u32(in);
    const std::int64_t hidden = read_u32(in);
    const std::int64_t out_dim = read_u32(in);
    SageModel m;
    m.l1.w_self = DenseMatrix(in_dim, hidden);
    m.l1.w_nbr = DenseMatrix(in_dim, hidden);
    m.l1.bias.assign(static_cast<std::size_t>(hidden), 0.0);
    m.l2.w_self = DenseMatrix(hidden, out_dim);
    m.l2.w_nbr = DenseMatrix(hidden, out_dim);
    m.l2.bias.assign(static_cast<std::size_t>(out_dim), 0.0);
    read_blob(in, m.l1.w_self.values);
    read_blob(in, m.l1.w_nbr.values);
    read_blob(in, m.l1.bias);
    read_blob(in, m.l2.w_self.values);
    read_blob(in, m.l2.w_nbr.values);
    read_blob(in, m.l2.bias);
    if (!in) throw LoadError("truncated checkpoint: " + path.string());
    return m;
}

void save_prob_matrix_tsv(const ProbMatrix& probs, const std::filesystem::path& path) {
    std::string buf;
    buf.reserve(static_cast<std::size_t>(probs.rows() * probs.cols() * 20));
    char num[32];
    for (std::int64_t i = 0; i < probs.rows(); ++i) {
        const double* r = probs.values.row(i);
        for (std::int64_t j = 0; j < probs.cols(); ++j) {
            if (j) buf += '\t';
            auto [ptr, ec] = std::to_chars(num, num + sizeof(num), r[j]);
            buf.append(num, ptr);
        }
        buf += '\n';
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write: " + path.string());
    out << buf;
}

ProbMatrix load_prob_matrix_tsv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw LoadError("missing file: " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    std::int64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            std::size_t tab = line.find('\t', pos);
            if (tab == std::string::npos) tab = line.size();
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(line.data() + pos, line.data() + tab, v);
            if (ec != std::errc() || ptr != line.data() + tab) {
                throw LoadError(path.string() + ":" + std::to_string(lineno) + ": bad number");
            }
            row.push_back(v);
            pos = tab + 1;
            if (tab == line.size()) break;
        }
        if (!rows.empty() && rows.front().size() != row.size()) {
            throw LoadError(path.string() + ":" + std::to_string(lineno) + ": ragged row");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw LoadError(path.string() + ": empty probability matrix");
    ProbMatrix out;
    out.values = DenseMatrix(static_cast<std::int64_t>(rows.size()),
                             static_cast<std::int64_t>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows.front().size(); ++j) {
            out.values.at(static_cast<std::int64_t>(i), static_cast<std::int64_t>(j)) = rows[i][j];
        }
    }
    return out;
}

}  // namespace pnd
