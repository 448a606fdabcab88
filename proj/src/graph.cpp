#include "gcnlab/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gcnlab {

Graph build_graph(int n, const std::vector<std::pair<int, int>>& pairs) {
    if (n < 0) throw std::invalid_argument("build_graph: negative node count");
    std::vector<std::pair<int, int>> canon;
    canon.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
        if (a < 0 || a >= n || b < 0 || b >= n) {
            throw std::invalid_argument("build_graph: edge (" + std::to_string(a) + ", " +
                                        std::to_string(b) + ") out of range for n=" +
                                        std::to_string(n));
        }
        if (a == b) {
            throw std::invalid_argument("build_graph: self-loop (" + std::to_string(a) + ", " +
                                        std::to_string(b) + ") is not allowed");
        }
        canon.emplace_back(std::min(a, b), std::max(a, b));
    }
    std::sort(canon.begin(), canon.end());
    canon.erase(std::unique(canon.begin(), canon.end()), canon.end());

    Graph g;
    g.n = n;
    g.edges = std::move(canon);
    g.degree.assign(n, 0);
    for (const auto& [i, j] : g.edges) {
        ++g.degree[i];
        ++g.degree[j];
    }
    return g;
}

double SparseMatrix::at(int r, int c) const {
    if (r < 0 || r >= rows || c < 0 || c >= cols) {
        throw std::out_of_range("SparseMatrix::at: index out of range");
    }
    auto begin = col_idx.begin() + row_ptr[r];
    auto end = col_idx.begin() + row_ptr[r + 1];
    auto it = std::lower_bound(begin, end, c);
    if (it == end || *it != c) return 0.0;
    return values[static_cast<size_t>(it - col_idx.begin())];
}

const char* operator_kind_name(OperatorKind kind) {
    switch (kind) {
        case OperatorKind::SymRenorm: return "sym_renorm";
        case OperatorKind::RwRenorm: return "rw_renorm";
        case OperatorKind::SymPlain: return "sym_plain";
        case OperatorKind::Laplacian: return "laplacian";
        case OperatorKind::Eta: return "eta";
    }
    return "?";
}

namespace {

// Sorted adjacency lists, optionally with the diagonal slot inserted.
std::vector<std::vector<int>> neighbor_lists(const Graph& g, bool with_self) {
    std::vector<std::vector<int>> nb(g.n);
    for (const auto& [i, j] : g.edges) {
        nb[i].push_back(j);
        nb[j].push_back(i);
    }
    for (int i = 0; i < g.n; ++i) {
        if (with_self) nb[i].push_back(i);
        std::sort(nb[i].begin(), nb[i].end());
    }
    return nb;
}

SparseMatrix from_lists(int n, const std::vector<std::vector<int>>& nb,
                        const std::vector<std::vector<double>>& vals) {
    SparseMatrix m;
    m.rows = m.cols = n;
    m.row_ptr.assign(n + 1, 0);
    for (int i = 0; i < n; ++i) m.row_ptr[i + 1] = m.row_ptr[i] + static_cast<int>(nb[i].size());
    m.col_idx.reserve(m.row_ptr[n]);
    m.values.reserve(m.row_ptr[n]);
    for (int i = 0; i < n; ++i) {
        m.col_idx.insert(m.col_idx.end(), nb[i].begin(), nb[i].end());
        m.values.insert(m.values.end(), vals[i].begin(), vals[i].end());
    }
    return m;
}

SparseMatrix transpose_csr(const SparseMatrix& m) {
    SparseMatrix t;
    t.rows = m.cols;
    t.cols = m.rows;
    t.row_ptr.assign(t.rows + 1, 0);
    for (int c : m.col_idx) ++t.row_ptr[c + 1];
    for (int i = 0; i < t.rows; ++i) t.row_ptr[i + 1] += t.row_ptr[i];
    t.col_idx.resize(m.col_idx.size());
    t.values.resize(m.values.size());
    std::vector<int> next(t.row_ptr.begin(), t.row_ptr.end() - 1);
    for (int r = 0; r < m.rows; ++r) {
        for (int k = m.row_ptr[r]; k < m.row_ptr[r + 1]; ++k) {
            int pos = next[m.col_idx[k]]++;
            t.col_idx[pos] = r;   // rows visited in order, so columns stay sorted
            t.values[pos] = m.values[k];
        }
    }
    return t;
}

}  // namespace

ConvOperator make_operator(const Graph& g, OperatorKind kind, std::optional<double> w) {
    if (kind == OperatorKind::Eta) {
        if (!w.has_value()) throw std::invalid_argument("make_operator: eta kind requires a weight");
        if (*w < 0.0) throw std::invalid_argument("make_operator: eta weight must be >= 0, got " +
                                                  std::to_string(*w));
    } else if (w.has_value()) {
        throw std::invalid_argument("make_operator: weight is only meaningful for the eta kind");
    }
    if (kind == OperatorKind::SymPlain || kind == OperatorKind::Laplacian) {
        for (int i = 0; i < g.n; ++i) {
            if (g.degree[i] == 0) {
                throw std::invalid_argument(
                    "make_operator: node " + std::to_string(i) +
                    " is isolated; D^{-1/2} is singular for this kind, use a renormalized kind");
            }
        }
    }

    ConvOperator op;
    op.kind = kind;
    op.degrees_with_loops.resize(g.n);
    for (int i = 0; i < g.n; ++i) op.degrees_with_loops[i] = g.degree[i] + 1.0;

    const bool self = (kind == OperatorKind::SymRenorm || kind == OperatorKind::RwRenorm ||
                       kind == OperatorKind::Eta);
    auto nb = neighbor_lists(g, self);
    std::vector<std::vector<double>> vals(g.n);

    switch (kind) {
        case OperatorKind::SymRenorm: {
            for (int i = 0; i < g.n; ++i)
                for (int j : nb[i])
                    vals[i].push_back(1.0 / std::sqrt(op.degrees_with_loops[i] *
                                                      op.degrees_with_loops[j]));
            break;
        }
        case OperatorKind::RwRenorm: {
            for (int i = 0; i < g.n; ++i)
                for (size_t k = 0; k < nb[i].size(); ++k)
                    vals[i].push_back(1.0 / op.degrees_with_loops[i]);
            break;
        }
        case OperatorKind::SymPlain:
        case OperatorKind::Laplacian: {
            const double sign = (kind == OperatorKind::SymPlain) ? 1.0 : -1.0;
            for (int i = 0; i < g.n; ++i)
                for (int j : nb[i])
                    vals[i].push_back(sign / std::sqrt(double(g.degree[i]) * double(g.degree[j])));
            // insert the diagonal 1 at its sorted position
            for (int i = 0; i < g.n; ++i) {
                auto pos = std::lower_bound(nb[i].begin(), nb[i].end(), i);
                vals[i].insert(vals[i].begin() + (pos - nb[i].begin()), 1.0);
                nb[i].insert(pos, i);
            }
            break;
        }
        case OperatorKind::Eta: {
            op.eta_weight = *w;
            std::vector<double> dhat(g.n);
            for (int i = 0; i < g.n; ++i) dhat[i] = 1.0 + *w * g.degree[i];
            if (*w == 0.0) {
                // I + 0*A normalized by D^ = I is the identity
                for (int i = 0; i < g.n; ++i) {
                    nb[i].assign(1, i);
                    vals[i].assign(1, 1.0);
                }
            } else {
                for (int i = 0; i < g.n; ++i)
                    for (int j : nb[i])
                        vals[i].push_back((i == j ? 1.0 : *w) / std::sqrt(dhat[i] * dhat[j]));
            }
            break;
        }
    }

    op.matrix = from_lists(g.n, nb, vals);
    if (kind == OperatorKind::RwRenorm) op.transpose_ = transpose_csr(op.matrix);
    return op;
}

std::vector<double> ConvOperator::apply(const std::vector<double>& x) const {
    if (static_cast<int>(x.size()) != matrix.cols) {
        throw std::invalid_argument("ConvOperator::apply: vector length mismatch");
    }
    std::vector<double> y(matrix.rows, 0.0);
    for (int i = 0; i < matrix.rows; ++i) {
        double acc = 0.0;
        for (int k = matrix.row_ptr[i]; k < matrix.row_ptr[i + 1]; ++k) {
            acc += matrix.values[k] * x[matrix.col_idx[k]];
        }
        y[i] = acc;
    }
    return y;
}

std::vector<double> ConvOperator::apply_transpose(const std::vector<double>& x) const {
    if (is_symmetric()) return apply(x);
    if (static_cast<int>(x.size()) != transpose_.cols) {
        throw std::invalid_argument("ConvOperator::apply_transpose: vector length mismatch");
    }
    std::vector<double> y(transpose_.rows, 0.0);
    for (int i = 0; i < transpose_.rows; ++i) {
        double acc = 0.0;
        for (int k = transpose_.row_ptr[i]; k < transpose_.row_ptr[i + 1]; ++k) {
            acc += transpose_.values[k] * x[transpose_.col_idx[k]];
        }
        y[i] = acc;
    }
    return y;
}

const SparseMatrix& ConvOperator::transpose_matrix() const {
    return is_symmetric() ? matrix : transpose_;
}

}  // namespace gcnlab
