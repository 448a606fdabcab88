#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "gcnlab/graph.hpp"
#include "gcnlab/tape.hpp"
#include "gcnlab/tensor.hpp"

namespace gcnlab {

enum class ModelFamily { Mlp, Gcn, Sgc };
enum class Trick { None, MeanSub, PairNorm, BatchNorm };

const char* model_family_name(ModelFamily f);
const char* trick_name(Trick t);

// Architecture description. `depth` counts weight layers for Mlp/Gcn and
// propagation steps for Sgc (which owns a single collapsed weight).
struct ModelSpec {
    ModelFamily family = ModelFamily::Gcn;
    int depth = 2;
    int in_dim = 0;
    int hidden_dim = 16;
    int out_dim = 0;
    OperatorKind op_kind = OperatorKind::SymRenorm;
    double eta_weight = 1.0;
    Trick trick = Trick::None;
    double pair_norm_scale = 1.0;
    bool skip = false;  // add output of layer l to the post-ReLU output of layer l+2
    std::uint64_t seed = 0;

    void validate() const;  // throws std::invalid_argument on bad combinations
    std::vector<int> layer_dims() const;  // [in, hidden, ..., hidden, out]
    int weight_count() const { return family == ModelFamily::Sgc ? 1 : depth; }
};

struct ModelParams {
    std::vector<Tensor> weights;
    // batch-norm state, one entry per weight layer when trick == BatchNorm
    std::vector<Tensor> bn_gamma;
    std::vector<Tensor> bn_beta;
    std::vector<BatchNormStats> bn_stats;
};

// Glorot-uniform initialization, bound sqrt(6 / (fan_in + fan_out)),
// deterministic under spec.seed. BatchNorm gammas start at 1, betas at 0.
ModelParams init_params(const ModelSpec& spec);

struct ForwardOptions {
    bool training = false;      // batch statistics + dropout when true
    double dropout_rate = 0.0;  // applied to layer inputs after the first layer
    std::mt19937_64* dropout_rng = nullptr;
};

struct ForwardResult {
    std::vector<VarId> activations;  // one per layer; last entry is the raw logits
    VarId logits = -1;
    std::vector<VarId> weight_leaves;  // tape ids of the trainable parameters
    std::vector<VarId> bn_gamma_leaves;
    std::vector<VarId> bn_beta_leaves;
};

// Runs the model on the tape. Gcn layers compute
// ReLU(spmm(op, trick(X)) W) with the trick applied to the layer input;
// the last layer emits raw logits (log-softmax belongs to the loss).
// Mlp omits the spmm; Sgc applies the operator depth times, then one
// weight. Skip connections add the output of layer l to the post-ReLU
// output of layer l+2 wherever the widths match (never into the logits).
ForwardResult forward(const ModelSpec& spec, ModelParams& params, Tape& tape, const Tensor& x0,
                      const ConvOperator& op, const ForwardOptions& opts = {});

// The layerwise normalization trick as a standalone value-level transform.
// MeanSub with a random-walk operator subtracts the plain column mean
// (kills columns proportional to 1); with a symmetric renormalized operator
// it subtracts the D~-factored mean X - D~^{1/2} 1 1^T D~^{-1/2} X / n
// (kills columns proportional to D~^{1/2} 1). PairNorm centers and rescales
// to mean squared row norm s^2. Trick::None is rejected.
Tensor apply_trick(const Tensor& x, Trick trick, OperatorKind op_kind,
                   const std::vector<double>& degrees_with_loops, double pair_norm_scale = 1.0);

}  // namespace gcnlab
