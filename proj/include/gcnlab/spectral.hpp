#pragma once

#include <cstdint>
#include <vector>

#include "gcnlab/graph.hpp"
#include "gcnlab/tensor.hpp"

namespace gcnlab {

// State of the constrained trace minimization. `rq` is the Rayleigh
// quotient Tr(X^T Lap X) / Tr(X^T X); its stationary values are the
// Laplacian eigenvalues, so rq lies in [0, 2). `energy` carries the 1/2
// factor of the Dirichlet form, i.e. energy = rq * norm_sq / 2.
struct RQState {
    Tensor x;
    double energy = 0.0;   // 0.5 * Tr(X^T Lap X)
    double norm_sq = 0.0;  // ||X||_F^2
    double rq = 0.0;       // Tr(X^T Lap X) / Tr(X^T X)
};

// 0.5 * Tr(X^T Lap X), evaluated through the sparse operator.
double dirichlet_energy(const Tensor& x, const ConvOperator& lap);

// Same quantity summed edge by edge:
// 0.5 * sum_ij A_ij || x_i / sqrt(d_i) - x_j / sqrt(d_j) ||^2.
// Kept as the independent route for testing the trace form.
double dirichlet_energy_pairwise(const Tensor& x, const Graph& g);

RQState make_rq_state(Tensor x, const ConvOperator& lap);

// Gradient of energy / norm_sq: (Lap X - rq X) / Tr(X^T X).
// Vanishes exactly when every column of X is an eigenvector of a common
// eigenvalue. Throws on X = 0.
Tensor rq_gradient(const Tensor& x, const ConvOperator& lap);

// One descent step: X_mid = (2 - Lap) X / (2 - rq), rescaled so the
// Frobenius norm constraint ||X||_F^2 = state.norm_sq is restored.
// Never increases rq; strictly decreases it unless X's columns span
// eigenvectors of a single eigenvalue.
RQState rq_descent_step(const RQState& state, const ConvOperator& lap);

// (op)^k x0, L2-normalized after each step when the flag is set. For
// operators with a dominant eigenvalue this converges to the dominant
// eigenvector direction. Throws on x0 = 0.
std::vector<double> power_iteration(const ConvOperator& op, std::vector<double> x0, int k,
                                    bool normalize_each_step = true);

// Power iteration toward the second dominant eigenvector of a renormalized
// operator. Each step deflates the dominant direction: plain column mean
// subtraction for RwRenorm, the D~-factored subtraction
// x - D~^{1/2} 1 1^T D~^{-1/2} x / n for SymRenorm. A final projection in
// the operator's natural metric removes the residual dominant component so
// the returned unit vector aligns with u_2 (SymRenorm) or D~^{-1/2} u_2
// (RwRenorm). Exits early once successive iterates agree to 1 - 1e-12.
std::vector<double> fiedler_approx(const ConvOperator& op, int k, std::uint64_t seed);

// Neighbor-aggregation weight as a function of the descent learning rate:
// w(eta) = 1 / (rq - 1 + norm_sq / eta), with w(0) = 0 as the limit.
// For rq < 1 the valid domain is eta < norm_sq / (1 - rq); outside it the
// function throws naming the bound.
double weight_of_eta(double eta, double rq, double norm_sq);

}  // namespace gcnlab
