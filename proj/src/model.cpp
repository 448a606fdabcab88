#include "gcnlab/model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gcnlab {

const char* model_family_name(ModelFamily f) {
    switch (f) {
        case ModelFamily::Mlp: return "mlp";
        case ModelFamily::Gcn: return "gcn";
        case ModelFamily::Sgc: return "sgc";
    }
    return "?";
}

const char* trick_name(Trick t) {
    switch (t) {
        case Trick::None: return "none";
        case Trick::MeanSub: return "mean_sub";
        case Trick::PairNorm: return "pair_norm";
        case Trick::BatchNorm: return "batch_norm";
    }
    return "?";
}

void ModelSpec::validate() const {
    if (depth < 1) throw std::invalid_argument("ModelSpec: depth must be >= 1");
    if (in_dim < 1 || out_dim < 1) throw std::invalid_argument("ModelSpec: dims must be >= 1");
    if (depth > 1 && hidden_dim < 1) {
        throw std::invalid_argument("ModelSpec: hidden_dim must be >= 1");
    }
    if (family == ModelFamily::Sgc) {
        if (trick != Trick::None) {
            throw std::invalid_argument("ModelSpec: sgc is the linear collapse; tricks do not apply");
        }
        if (skip) throw std::invalid_argument("ModelSpec: sgc has no layers to skip between");
    }
    if (pair_norm_scale <= 0.0) {
        throw std::invalid_argument("ModelSpec: pair_norm_scale must be positive");
    }
}

std::vector<int> ModelSpec::layer_dims() const {
    std::vector<int> dims;
    dims.push_back(in_dim);
    for (int l = 1; l < depth; ++l) dims.push_back(hidden_dim);
    dims.push_back(out_dim);
    return dims;
}

ModelParams init_params(const ModelSpec& spec) {
    spec.validate();
    ModelParams p;
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);

    auto glorot = [&](int fan_in, int fan_out) {
        const double bound = std::sqrt(6.0 / (fan_in + fan_out));
        Tensor w(fan_in, fan_out);
        for (auto& v : w.data()) v = bound * unif(rng);
        return w;
    };

    if (spec.family == ModelFamily::Sgc) {
        p.weights.push_back(glorot(spec.in_dim, spec.out_dim));
        return p;
    }
    const auto dims = spec.layer_dims();
    for (int l = 0; l < spec.depth; ++l) {
        p.weights.push_back(glorot(dims[l], dims[l + 1]));
    }
    if (spec.trick == Trick::BatchNorm) {
        for (int l = 0; l < spec.depth; ++l) {
            p.bn_gamma.push_back(Tensor::full(1, dims[l], 1.0));
            p.bn_beta.push_back(Tensor(1, dims[l]));
            p.bn_stats.emplace_back(dims[l]);
        }
    }
    return p;
}

namespace {

// Direction of the dominant eigenvector for the factored mean subtraction.
std::vector<double> sqrt_degrees(const std::vector<double>& degrees_with_loops) {
    std::vector<double> w(degrees_with_loops.size());
    for (size_t i = 0; i < w.size(); ++i) w[i] = std::sqrt(degrees_with_loops[i]);
    return w;
}

// Trick on the tape, applied to the input of layer l.
VarId tape_trick(Tape& tape, VarId x, const ModelSpec& spec, ModelParams& params, int layer,
                 const ConvOperator& op, const ForwardOptions& opts, ForwardResult& res) {
    switch (spec.trick) {
        case Trick::None:
            return x;
        case Trick::MeanSub: {
            if (op.kind == OperatorKind::RwRenorm) return tape.col_mean_subtract(x);
            const std::vector<double> w = sqrt_degrees(op.degrees_with_loops);
            return tape.col_mean_subtract(x, &w);
        }
        case Trick::PairNorm:
            return tape.row_l2_rescale(tape.col_mean_subtract(x), spec.pair_norm_scale);
        case Trick::BatchNorm: {
            const VarId g = tape.leaf(params.bn_gamma[layer], true);
            const VarId b = tape.leaf(params.bn_beta[layer], true);
            res.bn_gamma_leaves.push_back(g);
            res.bn_beta_leaves.push_back(b);
            return tape.batch_norm(x, g, b, 1e-5, &params.bn_stats[layer], opts.training);
        }
    }
    return x;
}

}  // namespace

ForwardResult forward(const ModelSpec& spec, ModelParams& params, Tape& tape, const Tensor& x0,
                      const ConvOperator& op, const ForwardOptions& opts) {
    spec.validate();
    if (static_cast<int>(params.weights.size()) != spec.weight_count()) {
        throw std::invalid_argument("forward: params do not match spec");
    }
    if (x0.cols() != spec.in_dim) {
        throw std::invalid_argument("forward: feature width " + std::to_string(x0.cols()) +
                                    " does not match in_dim " + std::to_string(spec.in_dim));
    }

    ForwardResult res;
    VarId x = tape.leaf(x0, false);

    try {
        if (spec.family == ModelFamily::Sgc) {
            for (int l = 0; l < spec.depth; ++l) x = tape.spmm(op, x);
            const VarId w = tape.leaf(params.weights[0], true);
            res.weight_leaves.push_back(w);
            res.logits = tape.matmul(x, w);
            res.activations.push_back(res.logits);
            return res;
        }

        for (int l = 0; l < spec.depth; ++l) {
            VarId h = x;
            if (opts.training && opts.dropout_rate > 0.0 && l > 0) {
                if (opts.dropout_rng == nullptr) {
                    throw std::invalid_argument("forward: dropout requires an rng");
                }
                h = tape.dropout(h, opts.dropout_rate, *opts.dropout_rng);
            }
            if (spec.trick != Trick::None) {
                h = tape_trick(tape, h, spec, params, l, op, opts, res);
            }
            if (spec.family == ModelFamily::Gcn) h = tape.spmm(op, h);
            const VarId w = tape.leaf(params.weights[l], true);
            res.weight_leaves.push_back(w);
            VarId z = tape.matmul(h, w);
            const bool last = (l == spec.depth - 1);
            if (!last) {
                z = tape.relu(z);
                if (spec.skip && l >= 2) {
                    const VarId prev = res.activations[l - 2];
                    if (tape.value(prev).cols() == tape.value(z).cols()) {
                        z = tape.add(z, prev);
                    }
                }
            }
            res.activations.push_back(z);
            x = z;
        }
        res.logits = res.activations.back();
        return res;
    } catch (const std::runtime_error& e) {
        throw std::runtime_error("forward: layer " + std::to_string(res.activations.size()) +
                                 ": " + e.what());
    }
}

Tensor apply_trick(const Tensor& x, Trick trick, OperatorKind op_kind,
                   const std::vector<double>& degrees_with_loops, double pair_norm_scale) {
    if (trick == Trick::None) {
        throw std::invalid_argument("apply_trick: Trick::None is not a transform");
    }
    Tape tape;
    const VarId in = tape.leaf(x, false);
    VarId out = in;
    switch (trick) {
        case Trick::MeanSub:
            if (op_kind == OperatorKind::RwRenorm) {
                out = tape.col_mean_subtract(in);
            } else {
                const std::vector<double> w = sqrt_degrees(degrees_with_loops);
                out = tape.col_mean_subtract(in, &w);
            }
            break;
        case Trick::PairNorm:
            out = tape.row_l2_rescale(tape.col_mean_subtract(in), pair_norm_scale);
            break;
        case Trick::BatchNorm: {
            BatchNormStats stats(x.cols());
            const VarId g = tape.leaf(Tensor::full(1, x.cols(), 1.0), false);
            const VarId b = tape.leaf(Tensor(1, x.cols()), false);
            out = tape.batch_norm(in, g, b, 1e-5, &stats, true);
            break;
        }
        case Trick::None:
            break;
    }
    return tape.value(out);
}

}  // namespace gcnlab
