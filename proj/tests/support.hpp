#pragma once

// Shared fixtures and independent oracles for the test suites. Everything
// here deliberately avoids the library's own computational paths: dense
// products are naive triple loops, expectations come from enumeration or
// finite differences.

#include <cmath>
#include <random>
#include <vector>

#include "gcnlab/graph.hpp"
#include "gcnlab/tensor.hpp"

namespace testsupport {

using gcnlab::Graph;
using gcnlab::Tensor;

inline Tensor random_tensor(int rows, int cols, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
    std::uniform_real_distribution<double> unif(lo, hi);
    Tensor t(rows, cols);
    for (auto& v : t.data()) v = unif(rng);
    return t;
}

// Erdos-Renyi-style graph; retries until every node has a neighbor.
inline Graph random_connected_graph(int n, double p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        std::vector<std::pair<int, int>> edges;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (unif(rng) < p) edges.emplace_back(i, j);
        Graph g = gcnlab::build_graph(n, edges);
        bool ok = true;
        for (int d : g.degree) ok = ok && d > 0;
        if (ok) return g;
    }
    throw std::runtime_error("random_connected_graph: could not avoid isolated nodes");
}

inline std::vector<double> densify(const gcnlab::SparseMatrix& m) {
    std::vector<double> a(size_t(m.rows) * m.cols, 0.0);
    for (int i = 0; i < m.rows; ++i)
        for (int k = m.row_ptr[i]; k < m.row_ptr[i + 1]; ++k)
            a[size_t(i) * m.cols + m.col_idx[k]] = m.values[k];
    return a;
}

// Naive dense product oracle.
inline Tensor dense_matmul(const std::vector<double>& a, int ar, int ac, const Tensor& x) {
    Tensor out(ar, x.cols());
    for (int i = 0; i < ar; ++i)
        for (int j = 0; j < x.cols(); ++j) {
            double s = 0.0;
            for (int k = 0; k < ac; ++k) s += a[size_t(i) * ac + k] * x(k, j);
            out(i, j) = s;
        }
    return out;
}

inline double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double ab = 0.0, aa = 0.0, bb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        ab += a[i] * b[i];
        aa += a[i] * a[i];
        bb += b[i] * b[i];
    }
    return ab / std::sqrt(aa * bb);
}

inline double max_abs_diff(const Tensor& a, const Tensor& b) {
    double m = 0.0;
    for (size_t i = 0; i < a.size(); ++i)
        m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
    return m;
}

}  // namespace testsupport
