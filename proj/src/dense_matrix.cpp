#include "pnd/dense_matrix.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "pnd/errors.hpp"

namespace pnd {

namespace {

using EigenRowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const EigenRowMajor>;
using Map = Eigen::Map<EigenRowMajor>;

}  // namespace

bool all_finite(const DenseMatrix& m) {
    for (double v : m.values) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void check_finite(const DenseMatrix& m, const char* what) {
    if (!all_finite(m)) throw InputError(std::string(what) + ": non-finite entry");
}

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) throw InputError("matmul: inner dimensions differ");
    DenseMatrix c(a.rows, b.cols);
    Map(c.values.data(), c.rows, c.cols) =
        ConstMap(a.values.data(), a.rows, a.cols) * ConstMap(b.values.data(), b.rows, b.cols);
    return c;
}

DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows != b.rows) throw InputError("matmul_at_b: row counts differ");
    DenseMatrix c(a.cols, b.cols);
    Map(c.values.data(), c.rows, c.cols) =
        ConstMap(a.values.data(), a.rows, a.cols).transpose() *
        ConstMap(b.values.data(), b.rows, b.cols);
    return c;
}

DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.cols) throw InputError("matmul_a_bt: column counts differ");
    DenseMatrix c(a.rows, b.rows);
    Map(c.values.data(), c.rows, c.cols) =
        ConstMap(a.values.data(), a.rows, a.cols) *
        ConstMap(b.values.data(), b.rows, b.cols).transpose();
    return c;
}

SparseFeatures SparseFeatures::from_dense(const DenseMatrix& m) {
    SparseFeatures s;
    s.rows = m.rows;
    s.cols = m.cols;
    s.row_ptr.assign(static_cast<std::size_t>(m.rows) + 1, 0);
    for (std::int64_t i = 0; i < m.rows; ++i) {
        const double* r = m.row(i);
        for (std::int64_t j = 0; j < m.cols; ++j) {
            if (r[j] != 0.0) {
                s.col.push_back(static_cast<std::int32_t>(j));
                s.val.push_back(r[j]);
            }
        }
        s.row_ptr[static_cast<std::size_t>(i) + 1] = static_cast<std::int64_t>(s.col.size());
    }
    return s;
}

DenseMatrix SparseFeatures::to_dense() const {
    DenseMatrix m(rows, cols);
    for (std::int64_t i = 0; i < rows; ++i) {
        for (std::int64_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            m.at(i, col[static_cast<std::size_t>(k)]) = val[static_cast<std::size_t>(k)];
        }
    }
    return m;
}

DenseMatrix spmm(const SparseFeatures& x, const DenseMatrix& w) {
    if (x.cols != w.rows) throw InputError("spmm: inner dimensions differ");
    DenseMatrix c(x.rows, w.cols);
    for (std::int64_t i = 0; i < x.rows; ++i) {
        double* out = c.row(i);
        for (std::int64_t k = x.row_ptr[i]; k < x.row_ptr[i + 1]; ++k) {
            const double xv = x.val[static_cast<std::size_t>(k)];
            const double* wr = w.row(x.col[static_cast<std::size_t>(k)]);
            for (std::int64_t j = 0; j < w.cols; ++j) out[j] += xv * wr[j];
        }
    }
    return c;
}

DenseMatrix spmm_xt_d(const SparseFeatures& x, const DenseMatrix& d) {
    if (x.rows != d.rows) throw InputError("spmm_xt_d: row counts differ");
    DenseMatrix g(x.cols, d.cols);
    for (std::int64_t i = 0; i < x.rows; ++i) {
        const double* dr = d.row(i);
        for (std::int64_t k = x.row_ptr[i]; k < x.row_ptr[i + 1]; ++k) {
            const double xv = x.val[static_cast<std::size_t>(k)];
            double* gr = g.row(x.col[static_cast<std::size_t>(k)]);
            for (std::int64_t j = 0; j < d.cols; ++j) gr[j] += xv * dr[j];
        }
    }
    return g;
}

}  // namespace pnd
