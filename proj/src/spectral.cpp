#include "gcnlab/spectral.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace gcnlab {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double norm(const std::vector<double>& v) { return std::sqrt(dot(v, v)); }

void normalize(std::vector<double>& v) {
    const double n = norm(v);
    if (n == 0.0) throw std::runtime_error("power iteration collapsed to the zero vector");
    for (auto& x : v) x /= n;
}

}  // namespace

double dirichlet_energy(const Tensor& x, const ConvOperator& lap) {
    if (lap.kind != OperatorKind::Laplacian) {
        throw std::invalid_argument("dirichlet_energy: operator must be a Laplacian");
    }
    if (lap.matrix.cols != x.rows()) {
        throw std::invalid_argument("dirichlet_energy: dimension mismatch");
    }
    Tensor lx = spmm(lap, x);
    double s = 0.0;
    for (size_t i = 0; i < x.size(); ++i) s += x.data()[i] * lx.data()[i];
    return 0.5 * s;
}

double dirichlet_energy_pairwise(const Tensor& x, const Graph& g) {
    if (g.n != x.rows()) {
        throw std::invalid_argument("dirichlet_energy_pairwise: dimension mismatch");
    }
    double s = 0.0;
    for (const auto& [i, j] : g.edges) {
        const double di = std::sqrt(double(g.degree[i]));
        const double dj = std::sqrt(double(g.degree[j]));
        for (int c = 0; c < x.cols(); ++c) {
            const double d = x(i, c) / di - x(j, c) / dj;
            s += d * d;
        }
    }
    return 0.5 * s;
}

RQState make_rq_state(Tensor x, const ConvOperator& lap) {
    RQState st;
    st.norm_sq = x.frobenius_norm_sq();
    if (st.norm_sq == 0.0) throw std::invalid_argument("make_rq_state: X must be nonzero");
    st.energy = dirichlet_energy(x, lap);
    st.rq = 2.0 * st.energy / st.norm_sq;
    st.x = std::move(x);
    return st;
}

Tensor rq_gradient(const Tensor& x, const ConvOperator& lap) {
    const double norm_sq = x.frobenius_norm_sq();
    if (norm_sq == 0.0) {
        throw std::invalid_argument("rq_gradient: undefined at X = 0");
    }
    Tensor lx = spmm(lap, x);
    double tr = 0.0;
    for (size_t i = 0; i < x.size(); ++i) tr += x.data()[i] * lx.data()[i];
    const double rq = tr / norm_sq;
    Tensor g(x.rows(), x.cols());
    for (size_t i = 0; i < x.size(); ++i) {
        g.data()[i] = (lx.data()[i] - rq * x.data()[i]) / norm_sq;
    }
    return g;
}

RQState rq_descent_step(const RQState& state, const ConvOperator& lap) {
    if (state.x.frobenius_norm_sq() == 0.0) {
        throw std::invalid_argument("rq_descent_step: undefined at X = 0");
    }
    Tensor lx = spmm(lap, state.x);
    Tensor mid(state.x.rows(), state.x.cols());
    const double denom = 2.0 - state.rq;
    for (size_t i = 0; i < mid.size(); ++i) {
        mid.data()[i] = (2.0 * state.x.data()[i] - lx.data()[i]) / denom;
    }
    const double mid_norm_sq = mid.frobenius_norm_sq();
    if (mid_norm_sq == 0.0) {
        throw std::runtime_error("rq_descent_step: (2 - Lap) X vanished; cannot restore the norm");
    }
    const double c3 = std::sqrt(state.norm_sq / mid_norm_sq);
    for (auto& v : mid.data()) v *= c3;
    return make_rq_state(std::move(mid), lap);
}

std::vector<double> power_iteration(const ConvOperator& op, std::vector<double> x0, int k,
                                    bool normalize_each_step) {
    if (op.matrix.rows != op.matrix.cols) {
        throw std::invalid_argument("power_iteration: operator must be square");
    }
    if (static_cast<int>(x0.size()) != op.matrix.cols) {
        throw std::invalid_argument("power_iteration: vector length mismatch");
    }
    if (norm(x0) == 0.0) throw std::invalid_argument("power_iteration: x0 must be nonzero");
    std::vector<double> x = std::move(x0);
    if (normalize_each_step) normalize(x);
    for (int step = 0; step < k; ++step) {
        x = op.apply(x);
        if (normalize_each_step) normalize(x);
    }
    return x;
}

std::vector<double> fiedler_approx(const ConvOperator& op, int k, std::uint64_t seed) {
    if (op.kind != OperatorKind::SymRenorm && op.kind != OperatorKind::RwRenorm) {
        throw std::invalid_argument(std::string("fiedler_approx: unsupported operator kind ") +
                                    operator_kind_name(op.kind));
    }
    const int n = op.size();
    const auto& dt = op.degrees_with_loops;

    // per-step deflation of the dominant direction
    auto deflate = [&](std::vector<double>& x) {
        if (op.kind == OperatorKind::RwRenorm) {
            double m = 0.0;
            for (double v : x) m += v;
            m /= n;
            for (auto& v : x) v -= m;
        } else {
            double m = 0.0;
            for (int i = 0; i < n; ++i) m += x[i] / std::sqrt(dt[i]);
            m /= n;
            for (int i = 0; i < n; ++i) x[i] -= std::sqrt(dt[i]) * m;
        }
    };

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> x(n);
    for (auto& v : x) v = gauss(rng);
    deflate(x);
    normalize(x);

    std::vector<double> prev = x;
    for (int step = 0; step < k; ++step) {
        x = op.apply(x);
        deflate(x);
        normalize(x);
        if (std::abs(dot(x, prev)) > 1.0 - 1e-12) break;
        prev = x;
    }

    // The per-step deflation is oblique: its fixed point still carries a
    // dominant-direction component. Project it out in the operator's
    // natural metric, which maps the fixed point onto the eigenvector.
    if (op.kind == OperatorKind::SymRenorm) {
        // dominant eigenvector: D~^{1/2} 1
        std::vector<double> u1(n);
        for (int i = 0; i < n; ++i) u1[i] = std::sqrt(dt[i]);
        const double c = dot(x, u1) / dot(u1, u1);
        for (int i = 0; i < n; ++i) x[i] -= c * u1[i];
    } else {
        // dominant eigenvector 1, removed D~-orthogonally
        double num = 0.0, den = 0.0;
        for (int i = 0; i < n; ++i) {
            num += dt[i] * x[i];
            den += dt[i];
        }
        const double c = num / den;
        for (auto& v : x) v -= c;
    }
    normalize(x);
    return x;
}

double weight_of_eta(double eta, double rq, double norm_sq) {
    if (eta < 0.0) throw std::invalid_argument("weight_of_eta: eta must be >= 0");
    if (eta == 0.0) return 0.0;
    if (rq < 1.0) {
        const double bound = norm_sq / (1.0 - rq);
        if (eta >= bound) {
            throw std::invalid_argument("weight_of_eta: eta must be below norm_sq/(1-rq) = " +
                                        std::to_string(bound));
        }
    }
    return 1.0 / (rq - 1.0 + norm_sq / eta);
}

}  // namespace gcnlab
