#pragma once

// Dense symmetric eigendecomposition by cyclic Jacobi rotations. This is the
// reference oracle for the spectral tests and diagnostics (n <= a few
// hundred); it is not part of the public API.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "gcnlab/graph.hpp"

namespace gcnlab::detail {

struct EigenDecomposition {
    std::vector<double> eigenvalues;           // ascending
    std::vector<std::vector<double>> vectors;  // vectors[k] pairs with eigenvalues[k]
};

// a: dense symmetric matrix, row-major, n x n.
inline EigenDecomposition jacobi_eigen(std::vector<double> a, int n) {
    if (static_cast<int>(a.size()) != n * n) {
        throw std::invalid_argument("jacobi_eigen: matrix size does not match n");
    }
    std::vector<double> v(size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[size_t(i) * n + i] = 1.0;

    auto off = [&]() {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) s += a[size_t(i) * n + j] * a[size_t(i) * n + j];
        return s;
    };

    const int max_sweeps = 100;
    for (int sweep = 0; sweep < max_sweeps && off() > 1e-26; ++sweep) {
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[size_t(p) * n + q];
                if (std::abs(apq) < 1e-300) continue;
                const double app = a[size_t(p) * n + p];
                const double aqq = a[size_t(q) * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = a[size_t(k) * n + p];
                    const double akq = a[size_t(k) * n + q];
                    a[size_t(k) * n + p] = c * akp - s * akq;
                    a[size_t(k) * n + q] = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = a[size_t(p) * n + k];
                    const double aqk = a[size_t(q) * n + k];
                    a[size_t(p) * n + k] = c * apk - s * aqk;
                    a[size_t(q) * n + k] = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = v[size_t(k) * n + p];
                    const double vkq = v[size_t(k) * n + q];
                    v[size_t(k) * n + p] = c * vkp - s * vkq;
                    v[size_t(k) * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;
    std::vector<double> diag(n);
    for (int i = 0; i < n; ++i) diag[i] = a[size_t(i) * n + i];
    std::sort(order.begin(), order.end(), [&](int x, int y) { return diag[x] < diag[y]; });

    EigenDecomposition out;
    out.eigenvalues.resize(n);
    out.vectors.assign(n, std::vector<double>(n));
    for (int k = 0; k < n; ++k) {
        out.eigenvalues[k] = diag[order[k]];
        for (int i = 0; i < n; ++i) out.vectors[k][i] = v[size_t(i) * n + order[k]];
    }
    return out;
}

inline std::vector<double> densify(const SparseMatrix& m) {
    std::vector<double> a(size_t(m.rows) * m.cols, 0.0);
    for (int i = 0; i < m.rows; ++i)
        for (int k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k)
            a[size_t(i) * m.cols + m.col_idx[k]] = m.values[k];
    return a;
}

// Eigendecomposition of a ConvOperator. RwRenorm is handled through its
// similar symmetric form: if A_sym u = lambda u then A_rw (D~^{-1/2} u) =
// lambda (D~^{-1/2} u), so the returned vectors are already transformed.
inline EigenDecomposition operator_eigen(const ConvOperator& op) {
    if (op.kind == OperatorKind::RwRenorm) {
        const int n = op.size();
        std::vector<double> sym(size_t(n) * n, 0.0);
        // reconstruct A_sym from A_rw: sym_ij = rw_ij * sqrt(d~_i / d~_j)
        const SparseMatrix& m = op.matrix;
        for (int i = 0; i < n; ++i)
            for (int k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k) {
                int j = m.col_idx[k];
                sym[size_t(i) * n + j] =
                    m.values[k] * std::sqrt(op.degrees_with_loops[i] / op.degrees_with_loops[j]);
            }
        auto dec = jacobi_eigen(std::move(sym), n);
        for (auto& vec : dec.vectors)
            for (int i = 0; i < n; ++i) vec[i] /= std::sqrt(op.degrees_with_loops[i]);
        return dec;
    }
    return jacobi_eigen(densify(op.matrix), op.matrix.rows);
}

}  // namespace gcnlab::detail
