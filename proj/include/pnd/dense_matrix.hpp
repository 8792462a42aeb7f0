#pragma once

#include <cstdint>
#include <vector>

namespace pnd {

using NodeId = std::int32_t;

// Row-major dense matrix of doubles. The backing store for probability
// matrices, features, and layer parameters.
struct DenseMatrix {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<double> values;  // rows * cols, row-major

    DenseMatrix() = default;
    DenseMatrix(std::int64_t r, std::int64_t c, double fill = 0.0)
        : rows(r), cols(c), values(static_cast<std::size_t>(r * c), fill) {}

    double& at(std::int64_t i, std::int64_t j) { return values[static_cast<std::size_t>(i * cols + j)]; }
    double at(std::int64_t i, std::int64_t j) const { return values[static_cast<std::size_t>(i * cols + j)]; }

    double* row(std::int64_t i) { return values.data() + i * cols; }
    const double* row(std::int64_t i) const { return values.data() + i * cols; }

    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }
};

// Throws InputError when any entry is not finite.
void check_finite(const DenseMatrix& m, const char* what);

bool all_finite(const DenseMatrix& m);

// C = A * B, delegated to Eigen. Deterministic for a fixed binary.
DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b);

// C = A^T * B.
DenseMatrix matmul_at_b(const DenseMatrix& a, const DenseMatrix& b);

// C = A * B^T.
DenseMatrix matmul_a_bt(const DenseMatrix& a, const DenseMatrix& b);

// CSR view of a feature matrix. Citation bag-of-words features are ~1%
// dense; the first-layer products run over this view. Built from a dense
// matrix it stores every entry (including zeros is avoided; zeros are
// skipped, which leaves sums identical because skipped terms are exact 0).
struct SparseFeatures {
    std::int64_t rows = 0;
    std::int64_t cols = 0;
    std::vector<std::int64_t> row_ptr;
    std::vector<std::int32_t> col;
    std::vector<double> val;

    static SparseFeatures from_dense(const DenseMatrix& m);
    DenseMatrix to_dense() const;
};

// C = X * W where X is the CSR view (rows x k) and W is k x out.
DenseMatrix spmm(const SparseFeatures& x, const DenseMatrix& w);

// G = X^T * D (k x out), the weight gradient of the first layer.
DenseMatrix spmm_xt_d(const SparseFeatures& x, const DenseMatrix& d);

}  // namespace pnd
