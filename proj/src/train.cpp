#include "gcnlab/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "gcnlab/spectral.hpp"

namespace gcnlab {

void Dataset::validate() const {
    const int nn = graph.n;
    if (features.rows() != nn) throw std::invalid_argument("Dataset: feature rows != n");
    if (static_cast<int>(labels.size()) != nn) throw std::invalid_argument("Dataset: labels size != n");
    if (static_cast<int>(train_mask.size()) != nn || static_cast<int>(val_mask.size()) != nn ||
        static_cast<int>(test_mask.size()) != nn) {
        throw std::invalid_argument("Dataset: mask size != n");
    }
    bool any_train = false;
    for (int i = 0; i < nn; ++i) {
        const int in_masks = int(train_mask[i]) + int(val_mask[i]) + int(test_mask[i]);
        if (in_masks > 1) {
            throw std::invalid_argument("Dataset: masks overlap at node " + std::to_string(i));
        }
        if (in_masks == 1) {
            if (labels[i] == kUnlabeled || labels[i] < 0 || labels[i] >= num_classes) {
                throw std::invalid_argument("Dataset: masked node " + std::to_string(i) +
                                            " lacks a valid label");
            }
        }
        any_train = any_train || train_mask[i];
    }
    if (!any_train) throw std::invalid_argument("Dataset: train mask is empty");
}

void TrainConfig::validate() const {
    if (epochs < 0) throw std::invalid_argument("TrainConfig: epochs must be >= 0");
    if (learning_rate <= 0.0) throw std::invalid_argument("TrainConfig: learning rate must be > 0");
    if (gamma < 0.0) throw std::invalid_argument("TrainConfig: gamma must be >= 0");
    if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("TrainConfig: bad dropout");
    if (eval_every < 1) throw std::invalid_argument("TrainConfig: eval_every must be >= 1");
}

VarId masked_cross_entropy(Tape& tape, VarId logits, const std::vector<int>& labels,
                           const std::vector<bool>& mask) {
    return tape.masked_nll(tape.log_softmax_rows(logits), labels, mask);
}

VarId combined_loss(Tape& tape, VarId logits, VarId final_repr, const std::vector<int>& labels,
                    const std::vector<bool>& mask, const ConvOperator& lap, double gamma) {
    if (gamma < 0.0) throw std::invalid_argument("combined_loss: gamma must be >= 0");
    const VarId l0 = masked_cross_entropy(tape, logits, labels, mask);
    if (gamma == 0.0) return l0;
    return tape.add(l0, tape.scale(tape.dirichlet(lap, final_repr), gamma));
}

void adam_step(std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, double lr, double weight_decay) {
    if (params.size() != grads.size()) throw std::invalid_argument("adam_step: size mismatch");
    if (state.m.empty()) {
        for (const Tensor* p : params) {
            state.m.emplace_back(p->rows(), p->cols());
            state.v.emplace_back(p->rows(), p->cols());
        }
    }
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    ++state.t;
    const double bc1 = 1.0 - std::pow(beta1, double(state.t));
    const double bc2 = 1.0 - std::pow(beta2, double(state.t));
    for (size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        if (!p.same_shape(*grads[i])) throw std::invalid_argument("adam_step: shape mismatch");
        for (size_t k = 0; k < p.size(); ++k) {
            const double g = grads[i]->data()[k] + weight_decay * p.data()[k];
            double& m = state.m[i].data()[k];
            double& v = state.v[i].data()[k];
            m = beta1 * m + (1.0 - beta1) * g;
            v = beta2 * v + (1.0 - beta2) * g * g;
            p.data()[k] -= lr * (m / bc1) / std::sqrt(v / bc2 + eps);
        }
    }
}

std::pair<double, double> smoothing_scores(const Tensor& x, int node_cap, std::uint64_t cap_seed) {
    const int n = x.rows(), d = x.cols();

    // feature score over column pairs, diagonal included
    std::vector<double> col_norm(d, 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) col_norm[j] += x(i, j) * x(i, j);
    for (auto& v : col_norm) v = std::sqrt(v);
    double feat = 0.0;
    for (int a = 0; a < d; ++a) {
        for (int b = 0; b < d; ++b) {
            if (col_norm[a] == 0.0 || col_norm[b] == 0.0) continue;
            double dp = 0.0;
            for (int i = 0; i < n; ++i) dp += x(i, a) * x(i, b);
            feat += std::abs(dp) / (col_norm[a] * col_norm[b]);
        }
    }
    feat /= double(d) * d;

    // node score over row pairs, optionally on a seeded subset
    std::vector<int> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    if (node_cap > 0 && n > node_cap) {
        std::mt19937_64 rng(cap_seed);
        std::shuffle(rows.begin(), rows.end(), rng);
        rows.resize(node_cap);
        std::sort(rows.begin(), rows.end());
    }
    const int m = static_cast<int>(rows.size());
    std::vector<double> row_norm(m, 0.0);
    for (int a = 0; a < m; ++a) {
        for (int j = 0; j < d; ++j) row_norm[a] += x(rows[a], j) * x(rows[a], j);
        row_norm[a] = std::sqrt(row_norm[a]);
    }
    double node = 0.0;
    for (int a = 0; a < m; ++a) {
        if (row_norm[a] == 0.0) continue;
        for (int b = 0; b < m; ++b) {
            if (row_norm[b] == 0.0) continue;
            double dp = 0.0;
            for (int j = 0; j < d; ++j) dp += x(rows[a], j) * x(rows[b], j);
            node += std::abs(dp) / (row_norm[a] * row_norm[b]);
        }
    }
    node /= double(m) * m;
    return {feat, node};
}

namespace {

double masked_accuracy(const Tensor& logits, const std::vector<int>& labels,
                       const std::vector<bool>& mask) {
    int total = 0, correct = 0;
    for (int i = 0; i < logits.rows(); ++i) {
        if (!mask[i]) continue;
        int pred = 0;
        for (int j = 1; j < logits.cols(); ++j) {
            if (logits(i, j) > logits(i, pred)) pred = j;  // ties keep the lower index
        }
        ++total;
        if (pred == labels[i]) ++correct;
    }
    if (total == 0) throw std::invalid_argument("evaluate: mask selects no rows");
    return double(correct) / total;
}

bool has_mask(const std::vector<bool>& m) {
    return std::any_of(m.begin(), m.end(), [](bool b) { return b; });
}

constexpr int kNodeScoreCap = 1000;  // exact score below this row count

}  // namespace

TrainResult train(const Dataset& data, const ModelSpec& spec, const TrainConfig& config) {
    data.validate();
    config.validate();
    spec.validate();

    const ConvOperator op = spec.op_kind == OperatorKind::Eta
                                ? make_operator(data.graph, spec.op_kind, spec.eta_weight)
                                : make_operator(data.graph, spec.op_kind);

    // The Laplacian backs both the optional loss term and the recorded
    // regularizer; graphs with isolated nodes cannot form it.
    std::optional<ConvOperator> lap;
    const bool isolated =
        std::any_of(data.graph.degree.begin(), data.graph.degree.end(), [](int d) { return d == 0; });
    if (!isolated) lap = make_operator(data.graph, OperatorKind::Laplacian);
    if (config.gamma > 0.0 && !lap) {
        throw std::invalid_argument(
            "train: the combined loss needs a Laplacian, but the graph has isolated nodes");
    }

    TrainResult result;
    result.params = init_params(spec);
    AdamState adam;
    std::mt19937_64 dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);

    const bool want_val = has_mask(data.val_mask);
    const bool want_test = has_mask(data.test_mask);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        try {
        // diagnostics on the pre-update state, dropout off, running stats
        EpochRecord rec;
        rec.epoch = epoch;
        {
            Tape tape;
            auto fwd = forward(spec, result.params, tape, data.features, op, {});
            // no pushes after this point: value() references the tape's nodes
            const VarId l0 = masked_cross_entropy(tape, fwd.logits, data.labels, data.train_mask);
            const Tensor& logits = tape.value(fwd.logits);
            rec.loss_l0 = tape.value(l0).item();
            rec.loss_lreg =
                lap ? dirichlet_energy(logits, *lap) : std::numeric_limits<double>::quiet_NaN();
            rec.acc_train = masked_accuracy(logits, data.labels, data.train_mask);
            if (want_val) rec.acc_val = masked_accuracy(logits, data.labels, data.val_mask);
            if (want_test) rec.acc_test = masked_accuracy(logits, data.labels, data.test_mask);
            if (epoch % config.eval_every == 0 || epoch == config.epochs - 1) {
                for (const VarId a : fwd.activations) {
                    auto [f, nsc] =
                        smoothing_scores(tape.value(a), kNodeScoreCap, config.seed);
                    rec.smooth_feat.push_back(f);
                    rec.smooth_node.push_back(nsc);
                }
            }
        }

        const auto t0 = std::chrono::steady_clock::now();
        {
            Tape tape;
            ForwardOptions opts;
            opts.training = true;
            opts.dropout_rate = config.dropout;
            opts.dropout_rng = &dropout_rng;
            auto fwd = forward(spec, result.params, tape, data.features, op, opts);
            VarId loss;
            if (config.gamma > 0.0) {
                loss = combined_loss(tape, fwd.logits, fwd.logits, data.labels, data.train_mask,
                                     *lap, config.gamma);
            } else {
                loss = masked_cross_entropy(tape, fwd.logits, data.labels, data.train_mask);
            }
            if (!std::isfinite(tape.value(loss).item())) throw DivergenceError(epoch);
            const auto grads = tape.backward(loss);

            std::vector<Tensor*> ps;
            std::vector<const Tensor*> gs;
            for (size_t i = 0; i < fwd.weight_leaves.size(); ++i) {
                ps.push_back(&result.params.weights[i]);
                gs.push_back(&grads[fwd.weight_leaves[i]]);
            }
            for (size_t i = 0; i < fwd.bn_gamma_leaves.size(); ++i) {
                ps.push_back(&result.params.bn_gamma[i]);
                gs.push_back(&grads[fwd.bn_gamma_leaves[i]]);
                ps.push_back(&result.params.bn_beta[i]);
                gs.push_back(&grads[fwd.bn_beta_leaves[i]]);
            }
            adam_step(ps, gs, adam, config.learning_rate, config.weight_decay);
        }
        const auto t1 = std::chrono::steady_clock::now();
        rec.ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
        result.records.push_back(std::move(rec));
        } catch (const DivergenceError&) {
            throw;
        } catch (const std::runtime_error&) {
            // the tape rejects non-finite values at the producing node;
            // during training that means the run has diverged
            throw DivergenceError(epoch);
        }
    }
    return result;
}

double evaluate(const ModelSpec& spec, ModelParams& params, const Dataset& data,
                const std::vector<bool>& mask) {
    if (!has_mask(mask)) throw std::invalid_argument("evaluate: mask is empty");
    const ConvOperator op = spec.op_kind == OperatorKind::Eta
                                ? make_operator(data.graph, spec.op_kind, spec.eta_weight)
                                : make_operator(data.graph, spec.op_kind);
    Tape tape;
    auto fwd = forward(spec, params, tape, data.features, op, {});
    return masked_accuracy(tape.value(fwd.logits), data.labels, mask);
}

}  // namespace gcnlab
