#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gcnlab {

// Undirected simple graph. Edges are stored once as (i, j) with i < j;
// self-loops are never stored (operator construction adds them where the
// operator definition calls for it).
struct Graph {
    int n = 0;
    std::vector<std::pair<int, int>> edges;  // deduplicated, i < j, sorted
    std::vector<int> degree;                 // distinct-neighbor count per node

    int num_edges() const { return static_cast<int>(edges.size()); }
};

// Builds a Graph from an arbitrary pair list. Pairs may arrive in either
// order or duplicated; they are canonicalized and deduplicated. Throws
// std::invalid_argument naming the offending pair on out-of-range indices
// or self-loops.
Graph build_graph(int n, const std::vector<std::pair<int, int>>& pairs);

// Compressed sparse row matrix, 64-bit values. Column indices are strictly
// increasing within each row and no explicit zeros are stored.
struct SparseMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<int> row_ptr;   // size rows + 1
    std::vector<int> col_idx;
    std::vector<double> values;

    // Entry lookup by binary search; absent entries read as 0.
    double at(int r, int c) const;
    int nnz() const { return static_cast<int>(values.size()); }
};

enum class OperatorKind {
    SymRenorm,   // D~^{-1/2} (I + A) D~^{-1/2}
    RwRenorm,    // D~^{-1} (I + A)
    SymPlain,    // I + D^{-1/2} A D^{-1/2}
    Laplacian,   // I - D^{-1/2} A D^{-1/2}
    Eta,         // D^^{-1/2} (I + w A) D^^{-1/2},  D^ = diag(1 + w d_i)
};

const char* operator_kind_name(OperatorKind kind);

// A normalized sparse convolution operator over a fixed graph. Immutable
// after construction; safe to share across threads.
struct ConvOperator {
    OperatorKind kind;
    double eta_weight = 1.0;                 // meaningful for Eta only
    SparseMatrix matrix;
    std::vector<double> degrees_with_loops;  // d~_i = d_i + 1

    int size() const { return matrix.rows; }
    bool is_symmetric() const { return kind != OperatorKind::RwRenorm; }

    // y = M x (fixed per-row accumulation order, hence bit-deterministic).
    std::vector<double> apply(const std::vector<double>& x) const;
    // y = M^T x. For symmetric kinds this is apply(); RwRenorm keeps a
    // transposed copy built at construction.
    std::vector<double> apply_transpose(const std::vector<double>& x) const;

    const SparseMatrix& transpose_matrix() const;

private:
    friend ConvOperator make_operator(const Graph&, OperatorKind, std::optional<double>);
    SparseMatrix transpose_;  // populated for RwRenorm only
};

// Realizes the formula for `kind` on graph g. `w` is required (and must be
// >= 0) iff kind == Eta. Kinds that divide by the raw degree matrix
// (SymPlain, Laplacian) reject graphs with isolated nodes.
ConvOperator make_operator(const Graph& g, OperatorKind kind,
                           std::optional<double> w = std::nullopt);

}  // namespace gcnlab
