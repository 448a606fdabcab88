#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gcnlab/graph.hpp"
#include "gcnlab/model.hpp"
#include "gcnlab/tape.hpp"
#include "gcnlab/tensor.hpp"

namespace gcnlab {

constexpr int kUnlabeled = -1;

// Transductive node-classification instance. Masks are disjoint; every
// masked node carries a valid label.
struct Dataset {
    std::string name;
    Graph graph;
    Tensor features;          // n x d
    std::vector<int> labels;  // n entries, kUnlabeled where unknown
    std::vector<bool> train_mask, val_mask, test_mask;
    int num_classes = 0;

    int n() const { return graph.n; }
    int feature_dim() const { return features.cols(); }
    void validate() const;  // throws on inconsistent fields
};

struct TrainConfig {
    int epochs = 400;
    double learning_rate = 0.01;
    double weight_decay = 5e-4;
    double gamma = 0.0;  // weight of the Dirichlet regularizer in the loss
    double dropout = 0.0;
    int eval_every = 1;  // cadence of smoothing-score evaluation
    std::uint64_t seed = 0;

    void validate() const;
};

// Per-epoch diagnostics. Row `epoch` describes the model state before that
// epoch's update, so row 0 is the untrained model. Smoothing scores are
// present only on cadence epochs.
struct EpochRecord {
    int epoch = 0;
    double loss_l0 = 0.0;
    double loss_lreg = 0.0;
    double acc_train = 0.0;
    double acc_val = -1.0;   // -1 when the dataset has no validation split
    double acc_test = -1.0;  // -1 when the dataset has no test split
    std::vector<double> smooth_feat;  // per layer, empty off-cadence
    std::vector<double> smooth_node;
    double ms = 0.0;  // wall-clock of the epoch's update step
};

struct TrainResult {
    std::vector<EpochRecord> records;
    ModelParams params;
};

// Raised when the loss stops being finite.
struct DivergenceError : std::runtime_error {
    int epoch;
    explicit DivergenceError(int e)
        : std::runtime_error("training diverged at epoch " + std::to_string(e)), epoch(e) {}
};

// Mean over masked rows of the negative log-softmax at the true class.
VarId masked_cross_entropy(Tape& tape, VarId logits, const std::vector<int>& labels,
                           const std::vector<bool>& mask);

// masked_cross_entropy + gamma * dirichlet(final_repr); gamma = 0 reduces
// exactly to the empirical term.
VarId combined_loss(Tape& tape, VarId logits, VarId final_repr, const std::vector<int>& labels,
                    const std::vector<bool>& mask, const ConvOperator& lap, double gamma);

// One Adam step (beta1 0.9, beta2 0.999, eps 1e-8 inside the square root,
// matching theta -= lr * m_hat / sqrt(v_hat + eps)); L2 weight decay is
// folded into the gradient before the moment updates.
struct AdamState {
    std::vector<Tensor> m, v;
    long t = 0;
};

void adam_step(std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, double lr, double weight_decay);

// Mean absolute pairwise cosine similarity across columns (feature score)
// and rows (node score), diagonal pairs included; zero vectors contribute
// cosine 0. Both scores are 1 when all vectors are parallel and nonzero.
// When `node_cap` > 0 and the matrix has more rows than the cap, the node
// score is computed on a seed-chosen subset of that size.
std::pair<double, double> smoothing_scores(const Tensor& x, int node_cap = 0,
                                           std::uint64_t cap_seed = 0);

// Full-batch training. Deterministic under (seed, config, dataset): records
// are reproducible bit for bit except for the wall-clock field.
TrainResult train(const Dataset& data, const ModelSpec& spec, const TrainConfig& config);

// Accuracy of argmax predictions over the mask; ties break toward the
// lowest class index. Throws on an empty mask.
double evaluate(const ModelSpec& spec, ModelParams& params, const Dataset& data,
                const std::vector<bool>& mask);

}  // namespace gcnlab
