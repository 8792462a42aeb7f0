#include "pnd/propagation.hpp"

#include <cmath>
#include <string>

#include "pnd/errors.hpp"

namespace pnd {

void PropagationConfig::validate() const {
    if (!(gamma > 0.0) || gamma > 1.0) throw InputError("PropagationConfig: gamma must be in (0, 1]");
    if (iterations < 1) throw InputError("PropagationConfig: iterations must be >= 1");
    if (!(floor_value > 0.0)) throw InputError("PropagationConfig: floor must be positive");
}

namespace {

// One step of P <- gamma * A_hat P + (1 - gamma) * P.
DenseMatrix step(const DenseMatrix& p, const NormalizedAdjacency& adj, double gamma) {
    DenseMatrix ap = apply_operator(adj, p);
    for (std::size_t k = 0; k < ap.values.size(); ++k) {
        ap.values[k] = gamma * ap.values[k] + (1.0 - gamma) * p.values[k];
    }
    return ap;
}

}  // namespace

DenseMatrix propagate_pnd(const DenseMatrix& p, const NormalizedAdjacency& adj,
                          const PropagationConfig& cfg) {
    cfg.validate();
    if (p.rows != adj.num_nodes) throw InputError("propagate_pnd: shape mismatch");
    check_finite(p, "propagate_pnd");
    DenseMatrix cur = p;
    for (int l = 0; l < cfg.iterations; ++l) cur = step(cur, adj, cfg.gamma);
    return cur;
}

DenseMatrix propagate_pnd_fix(const DenseMatrix& p, const NormalizedAdjacency& adj,
                              const PropagationConfig& cfg,
                              const std::vector<NodeId>& train_idx) {
    cfg.validate();
    if (p.rows != adj.num_nodes) throw InputError("propagate_pnd_fix: shape mismatch");
    check_finite(p, "propagate_pnd_fix");
    for (NodeId i : train_idx) {
        if (i < 0 || i >= p.rows) {
            throw InputError("propagate_pnd_fix: train index out of range: " + std::to_string(i));
        }
    }
    DenseMatrix cur = p;
    for (int l = 0; l < cfg.iterations; ++l) {
        cur = step(cur, adj, cfg.gamma);
        for (NodeId i : train_idx) {
            const double* src = p.row(i);
            double* dst = cur.row(i);
            for (std::int64_t c = 0; c < p.cols; ++c) dst[c] = src[c];
        }
    }
    return cur;
}

DenseMatrix ppr_exact(const DenseMatrix& p, const NormalizedAdjacency& adj, double gamma) {
    if (!(gamma > 0.0) || gamma >= 1.0) throw InputError("ppr_exact: gamma must be in (0, 1)");
    if (p.rows != adj.num_nodes) throw InputError("ppr_exact: shape mismatch");
    check_finite(p, "ppr_exact");

    const std::int64_t n = p.rows;
    const std::int64_t max_iters = 10 * n + 10;

    // (I - gamma * A_hat) is SPD for gamma in (0,1): CG per column.
    auto apply_system = [&](const std::vector<double>& x, std::vector<double>& out) {
        for (std::int64_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::int64_t k = adj.row_ptr[static_cast<std::size_t>(i)];
                 k < adj.row_ptr[static_cast<std::size_t>(i) + 1]; ++k) {
                acc += adj.weights[static_cast<std::size_t>(k)] *
                       x[static_cast<std::size_t>(adj.col_idx[static_cast<std::size_t>(k)])];
            }
            out[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] - gamma * acc;
        }
    };

    DenseMatrix z(p.rows, p.cols);
    std::vector<double> b(static_cast<std::size_t>(n));
    std::vector<double> x(static_cast<std::size_t>(n));
    std::vector<double> r(static_cast<std::size_t>(n));
    std::vector<double> d(static_cast<std::size_t>(n));
    std::vector<double> q(static_cast<std::size_t>(n));

    for (std::int64_t c = 0; c < p.cols; ++c) {
        double bnorm2 = 0.0;
        for (std::int64_t i = 0; i < n; ++i) {
            b[static_cast<std::size_t>(i)] = p.at(i, c);
            bnorm2 += b[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(i)];
        }
        const double tol = 1e-10 * (1.0 + std::sqrt(bnorm2));

        std::fill(x.begin(), x.end(), 0.0);
        r = b;
        d = r;
        double rr = 0.0;
        for (double v : r) rr += v * v;

        std::int64_t it = 0;
        while (std::sqrt(rr) > tol) {
            if (it++ >= max_iters) throw NumericError("ppr_exact: CG did not converge");
            apply_system(d, q);
            double dq = 0.0;
            for (std::int64_t i = 0; i < n; ++i) {
                dq += d[static_cast<std::size_t>(i)] * q[static_cast<std::size_t>(i)];
            }
            const double alpha = rr / dq;
            double rr_next = 0.0;
            for (std::int64_t i = 0; i < n; ++i) {
                x[static_cast<std::size_t>(i)] += alpha * d[static_cast<std::size_t>(i)];
                r[static_cast<std::size_t>(i)] -= alpha * q[static_cast<std::size_t>(i)];
                rr_next += r[static_cast<std::size_t>(i)] * r[static_cast<std::size_t>(i)];
            }
            const double beta = rr_next / rr;
            rr = rr_next;
            for (std::int64_t i = 0; i < n; ++i) {
                d[static_cast<std::size_t>(i)] =
                    r[static_cast<std::size_t>(i)] + beta * d[static_cast<std::size_t>(i)];
            }
        }
        for (std::int64_t i = 0; i < n; ++i) z.at(i, c) = (1.0 - gamma) * x[static_cast<std::size_t>(i)];
    }
    return z;
}

DenseMatrix inverse_propagate(const DenseMatrix& p, const NormalizedAdjacency& adj,
                              double gamma) {
    if (p.rows != adj.num_nodes) throw InputError("inverse_propagate: shape mismatch");
    DenseMatrix ap = apply_operator(adj, p);
    for (std::size_t k = 0; k < ap.values.size(); ++k) {
        ap.values[k] = 2.0 * p.values[k] - gamma * ap.values[k];
    }
    return ap;
}

ProbMatrix normalize_rows(const DenseMatrix& p, double floor_value) {
    if (!(floor_value > 0.0)) throw InputError("normalize_rows: floor must be positive");
    ProbMatrix out;
    out.values = DenseMatrix(p.rows, p.cols);
    for (std::int64_t i = 0; i < p.rows; ++i) {
        const double* src = p.row(i);
        double* dst = out.values.row(i);
        double sum = 0.0;
        for (std::int64_t c = 0; c < p.cols; ++c) {
            dst[c] = src[c] > floor_value ? src[c] : floor_value;
            sum += dst[c];
        }
        const double inv = 1.0 / sum;
        for (std::int64_t c = 0; c < p.cols; ++c) dst[c] *= inv;
    }
    return out;
}

}  // namespace pnd
