#include "gcnlab/tensor.hpp"

#include <cmath>
#include <stdexcept>

namespace gcnlab {

Tensor Tensor::full(int rows, int cols, double v) {
    Tensor t(rows, cols);
    for (auto& x : t.data_) x = v;
    return t;
}

Tensor Tensor::identity(int n) {
    Tensor t(n, n);
    for (int i = 0; i < n; ++i) t(i, i) = 1.0;
    return t;
}

Tensor Tensor::scalar(double v) {
    Tensor t(1, 1);
    t(0, 0) = v;
    return t;
}

Tensor Tensor::from_rows(int rows, int cols, std::vector<double> values) {
    if (values.size() != size_t(rows) * cols) {
        throw std::invalid_argument("Tensor::from_rows: value count does not match shape");
    }
    Tensor t;
    t.rows_ = rows;
    t.cols_ = cols;
    t.data_ = std::move(values);
    return t;
}

bool Tensor::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

double Tensor::frobenius_norm_sq() const {
    double s = 0.0;
    for (double x : data_) s += x * x;
    return s;
}

double Tensor::item() const {
    if (rows_ != 1 || cols_ != 1) throw std::invalid_argument("Tensor::item: tensor is not 1x1");
    return data_[0];
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.cols() != b.rows()) {
        throw std::invalid_argument("matmul: inner dimensions disagree (" +
                                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) +
                                    ")");
    }
    Tensor out(a.rows(), b.cols());
    const int n = a.rows(), k = a.cols(), m = b.cols();
    const double* ad = a.data().data();
    const double* bd = b.data().data();
    double* od = out.data().data();
    // ikj loop order: row of the output accumulated in a fixed order
    for (int i = 0; i < n; ++i) {
        const double* arow = ad + size_t(i) * k;
        double* orow = od + size_t(i) * m;
        for (int kk = 0; kk < k; ++kk) {
            const double aik = arow[kk];
            if (aik == 0.0) continue;
            const double* brow = bd + size_t(kk) * m;
            for (int j = 0; j < m; ++j) orow[j] += aik * brow[j];
        }
    }
    return out;
}

namespace {

Tensor csr_times_dense(const SparseMatrix& m, const Tensor& x) {
    if (m.cols != x.rows()) {
        throw std::invalid_argument("spmm: operator has " + std::to_string(m.cols) +
                                    " columns but matrix has " + std::to_string(x.rows()) +
                                    " rows");
    }
    Tensor out(m.rows, x.cols());
    const int c = x.cols();
    const double* xd = x.data().data();
    double* od = out.data().data();
    for (int i = 0; i < m.rows; ++i) {
        double* orow = od + size_t(i) * c;
        for (int k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
            const double v = m.values[k];
            const double* xrow = xd + size_t(m.col_idx[k]) * c;
            for (int j = 0; j < c; ++j) orow[j] += v * xrow[j];
        }
    }
    return out;
}

}  // namespace

Tensor spmm(const ConvOperator& op, const Tensor& x) { return csr_times_dense(op.matrix, x); }

Tensor spmm_transpose(const ConvOperator& op, const Tensor& x) {
    return csr_times_dense(op.transpose_matrix(), x);
}

}  // namespace gcnlab
