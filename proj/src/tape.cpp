#include "gcnlab/tape.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace gcnlab {

namespace {

void require(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace

VarId Tape::push(Node n, const char* what) {
    if (!n.value.all_finite()) {
        throw std::runtime_error(std::string(what) + " produced a non-finite value at node " +
                                 std::to_string(nodes_.size()));
    }
    n.needs_grad = n.trainable;
    for (int in : {n.a, n.b, n.c}) {
        if (in >= 0) n.needs_grad = n.needs_grad || nodes_[in].needs_grad;
    }
    nodes_.push_back(std::move(n));
    return static_cast<VarId>(nodes_.size()) - 1;
}

void Tape::check(VarId id) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size())) {
        throw std::invalid_argument("tape: unknown node id " + std::to_string(id));
    }
}

const Tensor& Tape::value(VarId id) const {
    check(id);
    return nodes_[id].value;
}

VarId Tape::leaf(Tensor value, bool trainable) {
    Node n;
    n.op = Op::Leaf;
    n.trainable = trainable;
    n.value = std::move(value);
    return push(std::move(n), "leaf");
}

VarId Tape::matmul(VarId a, VarId b) {
    check(a);
    check(b);
    Node n;
    n.op = Op::MatMul;
    n.a = a;
    n.b = b;
    n.value = gcnlab::matmul(nodes_[a].value, nodes_[b].value);
    return push(std::move(n), "matmul");
}

VarId Tape::spmm(const ConvOperator& op, VarId x) {
    check(x);
    Node n;
    n.op = Op::Spmm;
    n.a = x;
    n.conv = &op;
    n.value = gcnlab::spmm(op, nodes_[x].value);
    return push(std::move(n), "spmm");
}

VarId Tape::add(VarId a, VarId b) {
    check(a);
    check(b);
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    require(ta.same_shape(tb), "add: shapes disagree");
    Node n;
    n.op = Op::Add;
    n.a = a;
    n.b = b;
    n.value = ta;
    for (size_t i = 0; i < n.value.size(); ++i) n.value.data()[i] += tb.data()[i];
    return push(std::move(n), "add");
}

VarId Tape::relu(VarId x) {
    check(x);
    Node n;
    n.op = Op::Relu;
    n.a = x;
    n.value = nodes_[x].value;
    for (auto& v : n.value.data())
        if (v <= 0.0) v = 0.0;
    return push(std::move(n), "relu");
}

VarId Tape::scale(VarId x, double c) {
    check(x);
    Node n;
    n.op = Op::Scale;
    n.a = x;
    n.scalar = c;
    n.value = nodes_[x].value;
    for (auto& v : n.value.data()) v *= c;
    return push(std::move(n), "scale");
}

VarId Tape::col_mean_subtract(VarId x, const std::vector<double>* weights) {
    check(x);
    const Tensor& t = nodes_[x].value;
    Node n;
    n.op = Op::ColMeanSub;
    n.a = x;
    if (weights != nullptr) {
        require(static_cast<int>(weights->size()) == t.rows(),
                "col_mean_subtract: weights length must equal row count");
        for (double w : *weights)
            require(w > 0.0, "col_mean_subtract: weights must be positive");
        n.aux = *weights;
    }
    const int r = t.rows(), c = t.cols();
    n.value = t;
    for (int j = 0; j < c; ++j) {
        double m = 0.0;
        if (n.aux.empty()) {
            for (int i = 0; i < r; ++i) m += t(i, j);
            m /= r;
            for (int i = 0; i < r; ++i) n.value(i, j) -= m;
        } else {
            for (int i = 0; i < r; ++i) m += t(i, j) / n.aux[i];
            m /= r;
            for (int i = 0; i < r; ++i) n.value(i, j) -= n.aux[i] * m;
        }
    }
    return push(std::move(n), "col_mean_subtract");
}

VarId Tape::row_l2_rescale(VarId x, double s) {
    check(x);
    require(s > 0.0, "row_l2_rescale: s must be positive");
    const Tensor& t = nodes_[x].value;
    const double norm = std::sqrt(t.frobenius_norm_sq());
    require(norm > 0.0, "row_l2_rescale: input has zero norm");
    Node n;
    n.op = Op::RowL2Rescale;
    n.a = x;
    n.scalar = s;
    const double alpha = s * std::sqrt(double(t.rows())) / norm;
    n.aux = {alpha, norm};
    n.value = t;
    for (auto& v : n.value.data()) v *= alpha;
    return push(std::move(n), "row_l2_rescale");
}

VarId Tape::batch_norm(VarId x, VarId gamma, VarId beta, double eps, BatchNormStats* stats,
                       bool training) {
    check(x);
    check(gamma);
    check(beta);
    require(eps > 0.0, "batch_norm: eps must be positive");
    require(stats != nullptr, "batch_norm: stats must not be null");
    const Tensor& t = nodes_[x].value;
    const int r = t.rows(), c = t.cols();
    require(nodes_[gamma].value.rows() == 1 && nodes_[gamma].value.cols() == c,
            "batch_norm: gamma must be 1 x cols");
    require(nodes_[beta].value.rows() == 1 && nodes_[beta].value.cols() == c,
            "batch_norm: beta must be 1 x cols");
    require(static_cast<int>(stats->running_mean.size()) == c,
            "batch_norm: stats width mismatch");

    Node n;
    n.op = training ? Op::BatchNormTrain : Op::BatchNormEval;
    n.a = x;
    n.b = gamma;
    n.c = beta;
    n.scalar = eps;
    n.value = Tensor(r, c);
    // aux layout: [xhat (r*c), invstd (c)]
    n.aux.resize(size_t(r) * c + c);
    const Tensor& g = nodes_[gamma].value;
    const Tensor& bt = nodes_[beta].value;
    for (int j = 0; j < c; ++j) {
        double mean, var;
        if (training) {
            mean = 0.0;
            for (int i = 0; i < r; ++i) mean += t(i, j);
            mean /= r;
            var = 0.0;
            for (int i = 0; i < r; ++i) {
                const double d = t(i, j) - mean;
                var += d * d;
            }
            var /= r;
            constexpr double momentum = 0.9;
            stats->running_mean[j] = momentum * stats->running_mean[j] + (1.0 - momentum) * mean;
            stats->running_var[j] = momentum * stats->running_var[j] + (1.0 - momentum) * var;
        } else {
            mean = stats->running_mean[j];
            var = stats->running_var[j];
        }
        const double invstd = 1.0 / std::sqrt(var + eps);
        n.aux[size_t(r) * c + j] = invstd;
        for (int i = 0; i < r; ++i) {
            const double xhat = (t(i, j) - mean) * invstd;
            n.aux[size_t(i) * c + j] = xhat;
            n.value(i, j) = g(0, j) * xhat + bt(0, j);
        }
    }
    return push(std::move(n), "batch_norm");
}

VarId Tape::log_softmax_rows(VarId x) {
    check(x);
    const Tensor& t = nodes_[x].value;
    Node n;
    n.op = Op::LogSoftmaxRows;
    n.a = x;
    n.value = Tensor(t.rows(), t.cols());
    for (int i = 0; i < t.rows(); ++i) {
        double mx = t(i, 0);
        for (int j = 1; j < t.cols(); ++j) mx = std::max(mx, t(i, j));
        double lse = 0.0;
        for (int j = 0; j < t.cols(); ++j) lse += std::exp(t(i, j) - mx);
        lse = mx + std::log(lse);
        for (int j = 0; j < t.cols(); ++j) n.value(i, j) = t(i, j) - lse;
    }
    return push(std::move(n), "log_softmax_rows");
}

VarId Tape::dropout(VarId x, double rate, std::mt19937_64& rng) {
    check(x);
    require(rate >= 0.0 && rate < 1.0, "dropout: rate must be in [0, 1)");
    Node n;
    n.op = Op::Dropout;
    n.a = x;
    n.value = nodes_[x].value;
    n.aux.resize(n.value.size());
    const double keep = 1.0 - rate;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (size_t i = 0; i < n.value.size(); ++i) {
        const double m = (rate == 0.0 || unif(rng) >= rate) ? 1.0 / keep : 0.0;
        n.aux[i] = m;
        n.value.data()[i] *= m;
    }
    return push(std::move(n), "dropout");
}

VarId Tape::masked_nll(VarId log_probs, const std::vector<int>& labels,
                       const std::vector<bool>& mask) {
    check(log_probs);
    const Tensor& lp = nodes_[log_probs].value;
    require(static_cast<int>(labels.size()) == lp.rows(), "masked_nll: labels length mismatch");
    require(static_cast<int>(mask.size()) == lp.rows(), "masked_nll: mask length mismatch");
    Node n;
    n.op = Op::MaskedNll;
    n.a = log_probs;
    double sum = 0.0;
    for (int i = 0; i < lp.rows(); ++i) {
        if (!mask[i]) continue;
        require(labels[i] >= 0 && labels[i] < lp.cols(),
                "masked_nll: label out of range at row " + std::to_string(i));
        n.iaux.push_back(i);
        n.iaux.push_back(labels[i]);
        sum -= lp(i, labels[i]);
    }
    require(!n.iaux.empty(), "masked_nll: mask selects no rows");
    n.value = Tensor::scalar(sum / (n.iaux.size() / 2));
    return push(std::move(n), "masked_nll");
}

VarId Tape::dirichlet(const ConvOperator& lap, VarId x) {
    check(x);
    require(lap.kind == OperatorKind::Laplacian, "dirichlet: operator must be a Laplacian");
    const Tensor& t = nodes_[x].value;
    Tensor lx = gcnlab::spmm(lap, t);
    double s = 0.0;
    for (size_t i = 0; i < t.size(); ++i) s += t.data()[i] * lx.data()[i];
    Node n;
    n.op = Op::Dirichlet;
    n.a = x;
    n.conv = &lap;
    n.value = Tensor::scalar(0.5 * s);
    return push(std::move(n), "dirichlet");
}

VarId Tape::sum_all(VarId x) {
    check(x);
    double s = 0.0;
    for (double v : nodes_[x].value.data()) s += v;
    Node n;
    n.op = Op::SumAll;
    n.a = x;
    n.value = Tensor::scalar(s);
    return push(std::move(n), "sum_all");
}

std::vector<Tensor> Tape::backward(VarId loss) const {
    check(loss);
    const Tensor& lv = nodes_[loss].value;
    if (lv.rows() != 1 || lv.cols() != 1) {
        throw std::invalid_argument("backward: loss must be a 1x1 tensor");
    }

    std::vector<Tensor> grads(nodes_.size());
    auto grad_of = [&](int id) -> Tensor& {
        if (grads[id].size() == 0) {
            grads[id] = Tensor(nodes_[id].value.rows(), nodes_[id].value.cols());
        }
        return grads[id];
    };
    grad_of(loss)(0, 0) = 1.0;

    for (int id = loss; id >= 0; --id) {
        if (grads[id].size() == 0) continue;  // not reachable from the loss
        if (!nodes_[id].needs_grad) continue;  // nothing trainable upstream
        const Node& n = nodes_[id];
        const Tensor& g = grads[id];
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::MatMul: {
                const Tensor& a = nodes_[n.a].value;
                const Tensor& b = nodes_[n.b].value;
                if (nodes_[n.a].needs_grad) {
                    // dA = g B^T
                    Tensor& ga = grad_of(n.a);
                    for (int i = 0; i < a.rows(); ++i)
                        for (int k = 0; k < a.cols(); ++k) {
                            double acc = 0.0;
                            for (int j = 0; j < b.cols(); ++j) acc += g(i, j) * b(k, j);
                            ga(i, k) += acc;
                        }
                }
                if (nodes_[n.b].needs_grad) {
                    // dB = A^T g; row-major sweep skips zero entries of A,
                    // keeping per-element accumulation order (ascending i)
                    Tensor& gb = grad_of(n.b);
                    for (int i = 0; i < a.rows(); ++i) {
                        for (int k = 0; k < a.cols(); ++k) {
                            const double aik = a(i, k);
                            if (aik == 0.0) continue;
                            for (int j = 0; j < b.cols(); ++j) gb(k, j) += aik * g(i, j);
                        }
                    }
                }
                break;
            }
            case Op::Spmm: {
                Tensor gx = spmm_transpose(*n.conv, g);
                Tensor& ga = grad_of(n.a);
                for (size_t i = 0; i < gx.size(); ++i) ga.data()[i] += gx.data()[i];
                break;
            }
            case Op::Add: {
                Tensor& ga = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i];
                Tensor& gb = grad_of(n.b);
                for (size_t i = 0; i < g.size(); ++i) gb.data()[i] += g.data()[i];
                break;
            }
            case Op::Relu: {
                const Tensor& x = nodes_[n.a].value;
                Tensor& ga = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i)
                    if (x.data()[i] > 0.0) ga.data()[i] += g.data()[i];
                break;
            }
            case Op::Scale: {
                Tensor& ga = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i) ga.data()[i] += n.scalar * g.data()[i];
                break;
            }
            case Op::ColMeanSub: {
                // forward y = (I - omega r^T / n) x with r = 1 ./ omega,
                // so dx = (I - r omega^T / n) g
                const int r = n.value.rows(), c = n.value.cols();
                Tensor& ga = grad_of(n.a);
                for (int j = 0; j < c; ++j) {
                    double m = 0.0;
                    if (n.aux.empty()) {
                        for (int i = 0; i < r; ++i) m += g(i, j);
                        m /= r;
                        for (int i = 0; i < r; ++i) ga(i, j) += g(i, j) - m;
                    } else {
                        for (int i = 0; i < r; ++i) m += n.aux[i] * g(i, j);
                        m /= r;
                        for (int i = 0; i < r; ++i) ga(i, j) += g(i, j) - m / n.aux[i];
                    }
                }
                break;
            }
            case Op::RowL2Rescale: {
                const Tensor& x = nodes_[n.a].value;
                const double alpha = n.aux[0];
                const double norm_sq = n.aux[1] * n.aux[1];
                double gdotx = 0.0;
                for (size_t i = 0; i < g.size(); ++i) gdotx += g.data()[i] * x.data()[i];
                Tensor& ga = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i)
                    ga.data()[i] += alpha * (g.data()[i] - x.data()[i] * gdotx / norm_sq);
                break;
            }
            case Op::BatchNormTrain: {
                const int r = n.value.rows(), c = n.value.cols();
                const Tensor& gamma = nodes_[n.b].value;
                Tensor& gx = grad_of(n.a);
                Tensor& gg = grad_of(n.b);
                Tensor& gb = grad_of(n.c);
                for (int j = 0; j < c; ++j) {
                    const double invstd = n.aux[size_t(r) * c + j];
                    double sum_g = 0.0, sum_gx = 0.0;
                    for (int i = 0; i < r; ++i) {
                        const double gij = g(i, j);
                        sum_g += gij;
                        sum_gx += gij * n.aux[size_t(i) * c + j];
                    }
                    gb(0, j) += sum_g;
                    gg(0, j) += sum_gx;
                    const double k1 = gamma(0, j) * invstd;
                    for (int i = 0; i < r; ++i) {
                        const double xhat = n.aux[size_t(i) * c + j];
                        gx(i, j) += k1 * (g(i, j) - sum_g / r - xhat * sum_gx / r);
                    }
                }
                break;
            }
            case Op::BatchNormEval: {
                const int r = n.value.rows(), c = n.value.cols();
                const Tensor& gamma = nodes_[n.b].value;
                Tensor& gx = grad_of(n.a);
                Tensor& gg = grad_of(n.b);
                Tensor& gb = grad_of(n.c);
                for (int j = 0; j < c; ++j) {
                    const double invstd = n.aux[size_t(r) * c + j];
                    double sum_g = 0.0, sum_gx = 0.0;
                    for (int i = 0; i < r; ++i) {
                        sum_g += g(i, j);
                        sum_gx += g(i, j) * n.aux[size_t(i) * c + j];
                        gx(i, j) += g(i, j) * gamma(0, j) * invstd;
                    }
                    gb(0, j) += sum_g;
                    gg(0, j) += sum_gx;
                }
                break;
            }
            case Op::LogSoftmaxRows: {
                Tensor& ga = grad_of(n.a);
                for (int i = 0; i < n.value.rows(); ++i) {
                    double rowsum = 0.0;
                    for (int j = 0; j < n.value.cols(); ++j) rowsum += g(i, j);
                    for (int j = 0; j < n.value.cols(); ++j)
                        ga(i, j) += g(i, j) - std::exp(n.value(i, j)) * rowsum;
                }
                break;
            }
            case Op::Dropout: {
                Tensor& ga = grad_of(n.a);
                for (size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * n.aux[i];
                break;
            }
            case Op::MaskedNll: {
                const double gs = g(0, 0);
                const double scale = -gs / (n.iaux.size() / 2);
                Tensor& ga = grad_of(n.a);
                for (size_t k = 0; k + 1 < n.iaux.size(); k += 2)
                    ga(n.iaux[k], n.iaux[k + 1]) += scale;
                break;
            }
            case Op::Dirichlet: {
                // d/dX of 0.5 Tr(X^T L X) is L X for symmetric L
                Tensor lx = gcnlab::spmm(*n.conv, nodes_[n.a].value);
                const double gs = g(0, 0);
                Tensor& ga = grad_of(n.a);
                for (size_t i = 0; i < lx.size(); ++i) ga.data()[i] += gs * lx.data()[i];
                break;
            }
            case Op::SumAll: {
                const double gs = g(0, 0);
                Tensor& ga = grad_of(n.a);
                for (size_t i = 0; i < ga.size(); ++i) ga.data()[i] += gs;
                break;
            }
        }
    }

    // materialize zero gradients for trainable leaves the loss never reached
    for (size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].trainable && grads[i].size() == 0) {
            grads[i] = Tensor(nodes_[i].value.rows(), nodes_[i].value.cols());
        }
    }
    return grads;
}

double grad_check(const std::function<VarId(Tape&, const std::vector<VarId>&)>& f,
                  const std::vector<Tensor>& inputs, double step) {
    Tape tape;
    std::vector<VarId> leaves;
    leaves.reserve(inputs.size());
    for (const auto& t : inputs) leaves.push_back(tape.leaf(t, true));
    const VarId out = f(tape, leaves);
    const auto grads = tape.backward(out);

    auto eval_at = [&](const std::vector<Tensor>& pts) {
        Tape t2;
        std::vector<VarId> ls;
        ls.reserve(pts.size());
        for (const auto& t : pts) ls.push_back(t2.leaf(t, true));
        return t2.value(f(t2, ls)).item();
    };

    double max_rel = 0.0;
    std::vector<Tensor> pts = inputs;
    for (size_t li = 0; li < inputs.size(); ++li) {
        for (size_t k = 0; k < inputs[li].size(); ++k) {
            const double orig = pts[li].data()[k];
            pts[li].data()[k] = orig + step;
            const double fp = eval_at(pts);
            pts[li].data()[k] = orig - step;
            const double fm = eval_at(pts);
            pts[li].data()[k] = orig;
            const double numeric = (fp - fm) / (2.0 * step);
            const double analytic = grads[leaves[li]].data()[k];
            const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-8});
            max_rel = std::max(max_rel, std::abs(numeric - analytic) / denom);
        }
    }
    return max_rel;
}

}  // namespace gcnlab
