#pragma once

#include <cstddef>
#include <vector>

#include "gcnlab/graph.hpp"

namespace gcnlab {

// Dense row-major matrix of 64-bit floats. Plain value semantics; a 1x1
// Tensor doubles as a scalar in the differentiation layer.
class Tensor {
public:
    Tensor() = default;
    Tensor(int rows, int cols) : rows_(rows), cols_(cols), data_(size_t(rows) * cols, 0.0) {}

    static Tensor zeros(int rows, int cols) { return Tensor(rows, cols); }
    static Tensor full(int rows, int cols, double v);
    static Tensor identity(int n);
    static Tensor scalar(double v);
    static Tensor from_rows(int rows, int cols, std::vector<double> values);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return data_.size(); }
    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    double& operator()(int r, int c) { return data_[size_t(r) * cols_ + c]; }
    double operator()(int r, int c) const { return data_[size_t(r) * cols_ + c]; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool all_finite() const;
    double frobenius_norm_sq() const;
    double item() const;  // value of a 1x1 tensor; throws otherwise

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<double> data_;
};

// Value-level products. Dimension mismatches throw std::invalid_argument.
Tensor matmul(const Tensor& a, const Tensor& b);

// Exact sparse * dense product; per-row accumulation order is fixed so the
// result is bit-deterministic.
Tensor spmm(const ConvOperator& op, const Tensor& x);
Tensor spmm_transpose(const ConvOperator& op, const Tensor& x);

}  // namespace gcnlab
