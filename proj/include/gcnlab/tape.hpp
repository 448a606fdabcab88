#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "gcnlab/graph.hpp"
#include "gcnlab/tensor.hpp"

namespace gcnlab {

// Handle into a Tape. Valid only for the tape that produced it.
using VarId = int;

// Running statistics for one batch-norm site; owned by the model, updated
// in place during training-mode forwards (momentum 0.9).
struct BatchNormStats {
    std::vector<double> running_mean;
    std::vector<double> running_var;

    explicit BatchNormStats(int width = 0)
        : running_mean(width, 0.0), running_var(width, 1.0) {}
};

// Reverse-mode differentiation record. Operations run eagerly: each call
// computes the forward value and appends one node. Nodes only reference
// earlier nodes, so a single reverse sweep yields all gradients.
//
// A Tape is confined to one training step at a time. Tensors returned by
// value(...) stay valid until the tape is destroyed.
class Tape {
public:
    // Leaves. Trainable leaves receive gradients from backward().
    VarId leaf(Tensor value, bool trainable = false);

    // Primitives. All of them validate shapes and reject non-finite values,
    // reporting the node that produced them.
    VarId matmul(VarId a, VarId b);
    VarId spmm(const ConvOperator& op, VarId x);
    VarId add(VarId a, VarId b);
    VarId relu(VarId x);  // subgradient at exactly 0 is 0
    VarId scale(VarId x, double c);

    // Subtracts from each column its omega-factored mean: with weights
    // omega (all positive), y = x - omega .* mean(x ./ omega) per column,
    // i.e. plain mean subtraction conjugated by the diagonal map
    // x -> x ./ omega. Without weights, subtracts the plain column mean.
    // Idempotent for any valid omega.
    VarId col_mean_subtract(VarId x, const std::vector<double>* weights = nullptr);

    // Rescales the whole matrix so the mean squared row norm equals s^2:
    // y = x * (s * sqrt(n) / ||x||_F).
    VarId row_l2_rescale(VarId x, double s);

    // Per-column standardization with learnable gamma/beta (both 1 x cols).
    // Training mode uses batch statistics and updates `stats`; inference
    // mode reads `stats` and treats them as constants.
    VarId batch_norm(VarId x, VarId gamma, VarId beta, double eps, BatchNormStats* stats,
                     bool training);

    VarId log_softmax_rows(VarId x);

    // Inverted-scaling dropout; identity when rate == 0.
    VarId dropout(VarId x, double rate, std::mt19937_64& rng);

    // Mean over masked rows of -log_probs[row][label[row]]; 1x1 output.
    VarId masked_nll(VarId log_probs, const std::vector<int>& labels,
                     const std::vector<bool>& mask);

    // 0.5 * Tr(X^T Lap X) as a 1x1 node; lap must be a Laplacian operator.
    VarId dirichlet(const ConvOperator& lap, VarId x);

    VarId sum_all(VarId x);

    const Tensor& value(VarId id) const;
    int size() const { return static_cast<int>(nodes_.size()); }

    // Single reverse sweep from a scalar loss. Returns one gradient per
    // node id; trainable leaves unreachable from the loss get zeros.
    std::vector<Tensor> backward(VarId loss) const;

private:
    enum class Op : std::uint8_t {
        Leaf,
        MatMul,
        Spmm,
        Add,
        Relu,
        Scale,
        ColMeanSub,
        RowL2Rescale,
        BatchNormTrain,
        BatchNormEval,
        LogSoftmaxRows,
        Dropout,
        MaskedNll,
        Dirichlet,
        SumAll,
    };

    struct Node {
        Op op;
        int a = -1, b = -1, c = -1;
        Tensor value;
        double scalar = 0.0;           // scale factor / rescale s / bn eps
        std::vector<double> aux;       // op-specific saved data
        std::vector<int> iaux;         // masked row/label pairs
        const ConvOperator* conv = nullptr;
        bool trainable = false;
        bool needs_grad = false;  // trainable, or fed by a node that is
    };

    VarId push(Node n, const char* what);
    void check(VarId id) const;

    std::deque<Node> nodes_;  // reference-stable: value() stays valid across pushes
};

// Max relative error between the reverse-mode gradient of f and central
// finite differences, over every entry of every input. f must build its
// graph on the given tape from the supplied leaves and return a scalar
// node. Relative error uses denominator max(|a|, |b|, 1e-8).
double grad_check(const std::function<VarId(Tape&, const std::vector<VarId>&)>& f,
                  const std::vector<Tensor>& inputs, double step);

}  // namespace gcnlab
