#include <doctest.h>

#include <cmath>
#include <functional>
#include <random>

#include "gcnlab/data.hpp"
#include "gcnlab/detail/dense_eigen.hpp"
#include "gcnlab/spectral.hpp"
#include "support.hpp"

using namespace gcnlab;
using namespace testsupport;

namespace {

// the two documented factions of the karate club split
constexpr int kFactions[34] = {0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 1, 0,
                               0, 1, 0, 1, 0, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1};

double fd_of(const std::function<double(const Tensor&)>& f, const Tensor& at, int i, int j,
             double step) {
    Tensor p = at;
    p(i, j) += step;
    const double fp = f(p);
    p(i, j) -= 2.0 * step;
    const double fm = f(p);
    return (fp - fm) / (2.0 * step);
}

}  // namespace

TEST_CASE("dirichlet energy: null vector, two-node case, trace == pairwise") {
    std::mt19937_64 rng(1);
    const Graph karate = load_karate().graph;
    const ConvOperator lap = make_operator(karate, OperatorKind::Laplacian);

    Tensor null_col(34, 1);
    for (int i = 0; i < 34; ++i) null_col(i, 0) = std::sqrt(double(karate.degree[i]));
    CHECK(std::abs(dirichlet_energy(null_col, lap)) < 1e-12);
    CHECK(std::abs(dirichlet_energy_pairwise(null_col, karate)) < 1e-12);

    const Graph pair = build_graph(2, {{0, 1}});
    const ConvOperator pair_lap = make_operator(pair, OperatorKind::Laplacian);
    const Tensor x = Tensor::from_rows(2, 1, {1.0, -1.0});
    CHECK(dirichlet_energy_pairwise(x, pair) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(dirichlet_energy(x, pair_lap) == doctest::Approx(2.0).epsilon(1e-14));

    for (int trial = 0; trial < 50; ++trial) {
        Tensor r = random_tensor(34, 1 + int(rng() % 5), rng, -2.0, 2.0);
        CHECK(std::abs(dirichlet_energy(r, lap) - dirichlet_energy_pairwise(r, karate)) < 1e-9);
    }
}

TEST_CASE("rayleigh quotient is scale invariant and lies in [0, 2)") {
    std::mt19937_64 rng(2);
    const Graph karate = load_karate().graph;
    const ConvOperator lap = make_operator(karate, OperatorKind::Laplacian);
    for (int trial = 0; trial < 100; ++trial) {
        Tensor x = random_tensor(34, 2, rng);
        const RQState base = make_rq_state(x, lap);
        CHECK(base.rq >= 0.0);
        CHECK(base.rq < 2.0);
        CHECK(base.rq == doctest::Approx(2.0 * base.energy / base.norm_sq).epsilon(1e-15));
        for (double c : {-3.0, 0.01, 7.0}) {
            Tensor cx = x;
            for (auto& v : cx.data()) v *= c;
            const RQState scaled = make_rq_state(cx, lap);
            CHECK(std::abs(scaled.rq - base.rq) < 1e-12);
        }
    }
}

TEST_CASE("rq_gradient: eigenvector stationarity, finite differences, homogeneity") {
    std::mt19937_64 rng(3);
    const Graph karate = load_karate().graph;
    const ConvOperator lap = make_operator(karate, OperatorKind::Laplacian);

    Tensor null_col(34, 1);
    for (int i = 0; i < 34; ++i) null_col(i, 0) = std::sqrt(double(karate.degree[i]));
    const Tensor g0 = rq_gradient(null_col, lap);
    CHECK(std::sqrt(g0.frobenius_norm_sq()) < 1e-10);

    auto ratio_half = [&](const Tensor& t) {
        return dirichlet_energy(t, lap) / t.frobenius_norm_sq();
    };
    auto ratio_full = [&](const Tensor& t) {
        return 2.0 * dirichlet_energy(t, lap) / t.frobenius_norm_sq();
    };
    Tensor x = random_tensor(34, 2, rng);
    const Tensor grad = rq_gradient(x, lap);
    for (int probe = 0; probe < 20; ++probe) {
        const int i = int(rng() % 34), j = int(rng() % 2);
        // the implemented gradient is exactly the derivative of the
        // half-trace ratio, and half the derivative of the full ratio
        const double fd_half = fd_of(ratio_half, x, i, j, 1e-5);
        const double fd_full = fd_of(ratio_full, x, i, j, 1e-5);
        const double denom = std::max({std::abs(fd_half), std::abs(grad(i, j)), 1e-8});
        CHECK(std::abs(fd_half - grad(i, j)) / denom < 1e-6);
        CHECK(std::abs(fd_full - 2.0 * grad(i, j)) / denom < 1e-5);
    }

    Tensor x5 = x;
    for (auto& v : x5.data()) v *= 5.0;
    const Tensor grad5 = rq_gradient(x5, lap);
    for (size_t k = 0; k < grad.size(); ++k) {
        CHECK(grad5.data()[k] == doctest::Approx(grad.data()[k] / 5.0).epsilon(1e-12));
    }

    CHECK_THROWS_AS(rq_gradient(Tensor(34, 1), lap), std::invalid_argument);
}

TEST_CASE("rq_descent_step: fixed point, monotone decrease, norm restoration") {
    std::mt19937_64 rng(4);
    const Graph karate = load_karate().graph;
    const ConvOperator lap = make_operator(karate, OperatorKind::Laplacian);

    // dominant eigenvector of (2 - Lap) is the Laplacian null vector
    Tensor null_col(34, 1);
    for (int i = 0; i < 34; ++i) null_col(i, 0) = std::sqrt(double(karate.degree[i]));
    RQState st = make_rq_state(null_col, lap);
    RQState next = rq_descent_step(st, lap);
    CHECK(std::abs(next.rq - st.rq) < 1e-12);

    for (int trial = 0; trial < 20; ++trial) {
        RQState s = make_rq_state(random_tensor(34, 3, rng), lap);
        RQState s2 = rq_descent_step(s, lap);
        CHECK(s2.rq < s.rq);  // random X is not an eigenvector
        CHECK(s2.norm_sq == doctest::Approx(s.norm_sq).epsilon(1e-12));
    }
}

TEST_CASE("rq descent: 1000 random trials never increase, 500 steps reach 1e-6") {
    std::mt19937_64 rng(20260809);
    int asymptotic_runs = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const int n = 4 + int(rng() % 27);
        const Graph g = random_connected_graph(n, 0.3, rng);
        const ConvOperator lap = make_operator(g, OperatorKind::Laplacian);
        RQState st = make_rq_state(random_tensor(n, 1 + int(rng() % 3), rng), lap);
        const int steps = (trial % 20 == 0) ? 500 : 25;  // long runs on a slice
        for (int k = 0; k < steps; ++k) {
            const Tensor grad = rq_gradient(st.x, lap);
            const double gnorm = std::sqrt(grad.frobenius_norm_sq());
            RQState nx = rq_descent_step(st, lap);
            CHECK(nx.rq <= st.rq + 1e-12);
            if (gnorm > 1e-8) CHECK(nx.rq < st.rq);
            st = nx;
        }
        if (steps == 500) {
            ++asymptotic_runs;
            CHECK(st.rq < 1e-6);
        }
    }
    CHECK(asymptotic_runs == 50);
}

TEST_CASE("power_iteration: identity fixed point and zero-vector rejection") {
    std::mt19937_64 rng(5);
    const Graph karate = load_karate().graph;
    const ConvOperator ident = make_operator(karate, OperatorKind::Eta, 0.0);
    std::vector<double> x0(34);
    for (auto& v : x0) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    auto out = power_iteration(ident, x0, 10);
    double norm0 = 0.0;
    for (double v : x0) norm0 += v * v;
    norm0 = std::sqrt(norm0);
    for (int i = 0; i < 34; ++i) CHECK(out[i] == doctest::Approx(x0[i] / norm0).epsilon(1e-12));

    CHECK_THROWS_AS(power_iteration(ident, std::vector<double>(34, 0.0), 5),
                    std::invalid_argument);
}

TEST_CASE("power_iteration reaches the dominant eigenvectors on karate") {
    std::mt19937_64 rng(6);
    const Graph karate = load_karate().graph;
    const ConvOperator sym = make_operator(karate, OperatorKind::SymRenorm);
    const ConvOperator rw = make_operator(karate, OperatorKind::RwRenorm);

    std::vector<double> x0(34);
    for (auto& v : x0) v = std::normal_distribution<double>()(rng);

    std::vector<double> dsqrt(34), ones(34, 1.0);
    for (int i = 0; i < 34; ++i) dsqrt[i] = std::sqrt(sym.degrees_with_loops[i]);

    auto got_sym = power_iteration(sym, x0, 200);
    CHECK(std::abs(cosine(got_sym, dsqrt)) >= 0.999999);
    auto got_rw = power_iteration(rw, x0, 200);
    CHECK(std::abs(cosine(got_rw, ones)) >= 0.999999);
}

TEST_CASE("power iteration error decays geometrically at the spectral ratio") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        const int n = 10 + int(rng() % 15);
        const Graph g = random_connected_graph(n, 0.4, rng);
        // nonnegative spectrum, so the magnitude ratio is lambda2/lambda1
        const ConvOperator op = make_operator(g, OperatorKind::SymPlain);
        auto dec = detail::jacobi_eigen(densify(op.matrix), n);
        const double l1 = dec.eigenvalues[n - 1], l2 = dec.eigenvalues[n - 2];
        const double ratio = l2 / l1;
        if (ratio > 0.9) continue;  // too slow to resolve in 25 steps

        std::vector<double> x0(n);
        for (auto& v : x0) v = std::normal_distribution<double>()(rng);
        std::vector<double> sines;
        std::vector<double> x = x0;
        for (int k = 1; k <= 25; ++k) {
            x = power_iteration(op, x, 1);
            const double c = std::abs(cosine(x, dec.vectors[n - 1]));
            sines.push_back(std::sqrt(std::max(0.0, 1.0 - c * c)));
        }
        double cfit = 0.0;
        for (int k = 1; k <= 5; ++k) cfit = std::max(cfit, sines[k - 1] / std::pow(ratio, k));
        for (int k = 6; k <= 25; ++k) {
            if (sines[k - 1] < 1e-13) break;  // at the floating-point floor
            CHECK(sines[k - 1] <= cfit * std::pow(ratio, k) * 1.05 + 1e-12);
        }
    }
}

TEST_CASE("fiedler_approx matches the dense-oracle second eigenvector on karate") {
    const Graph karate = load_karate().graph;
    for (OperatorKind kind : {OperatorKind::SymRenorm, OperatorKind::RwRenorm}) {
        const ConvOperator op = make_operator(karate, kind);
        const auto dec = detail::operator_eigen(op);
        const auto& second = dec.vectors[32];  // eigenvalues ascend; index n-2
        const auto got = fiedler_approx(op, 500, 20260809);
        CHECK(std::abs(cosine(got, second)) >= 0.999);

        // sign pattern separates the two factions with at most 2 misassigned
        int mis_a = 0, mis_b = 0;
        for (int i = 0; i < 34; ++i) {
            const int side = got[i] > 0.0 ? 1 : 0;
            mis_a += (side != kFactions[i]);
            mis_b += (side == kFactions[i]);
        }
        CHECK(std::min(mis_a, mis_b) <= 2);
    }
}

TEST_CASE("fiedler_approx output is orthogonal to the deflated direction") {
    const Graph karate = load_karate().graph;
    const ConvOperator sym = make_operator(karate, OperatorKind::SymRenorm);
    const auto v_sym = fiedler_approx(sym, 300, 11);
    std::vector<double> dsqrt(34);
    for (int i = 0; i < 34; ++i) dsqrt[i] = std::sqrt(sym.degrees_with_loops[i]);
    CHECK(std::abs(cosine(v_sym, dsqrt)) <= 1e-8);

    const ConvOperator rw = make_operator(karate, OperatorKind::RwRenorm);
    const auto v_rw = fiedler_approx(rw, 300, 11);
    // D~-weighted orthogonality against the dominant eigenvector 1
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 34; ++i) {
        num += rw.degrees_with_loops[i] * v_rw[i];
        den += rw.degrees_with_loops[i];
    }
    CHECK(std::abs(num / den) <= 1e-8);
}

TEST_CASE("fiedler_approx on two disconnected cliques separates them") {
    std::vector<std::pair<int, int>> edges;
    for (int a = 0; a < 5; ++a)
        for (int b = a + 1; b < 5; ++b) {
            edges.emplace_back(a, b);
            edges.emplace_back(a + 5, b + 5);
        }
    const Graph g = build_graph(10, edges);
    const ConvOperator op = make_operator(g, OperatorKind::SymRenorm);
    const auto v = fiedler_approx(op, 300, 3);
    for (int i = 1; i < 5; ++i) {
        CHECK(v[i] == doctest::Approx(v[0]).epsilon(1e-9));
        CHECK(v[i + 5] == doctest::Approx(v[5]).epsilon(1e-9));
    }
    CHECK(v[0] * v[5] < 0.0);

    CHECK_THROWS_AS(fiedler_approx(make_operator(g, OperatorKind::SymPlain), 10, 0),
                    std::invalid_argument);
}

TEST_CASE("stationarity of the quotient is equivalent to being an eigenvector") {
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 6 + int(rng() % 15);
        const Graph g = random_connected_graph(n, 0.4, rng);
        const ConvOperator lap = make_operator(g, OperatorKind::Laplacian);
        const auto dec = detail::jacobi_eigen(densify(lap.matrix), n);

        // columns spanning a single eigenvalue: gradient vanishes
        Tensor x(n, 2);
        for (int i = 0; i < n; ++i) {
            x(i, 0) = dec.vectors[0][i] * 2.0;
            x(i, 1) = dec.vectors[0][i] * -0.5;
        }
        CHECK(std::sqrt(rq_gradient(x, lap).frobenius_norm_sq()) < 1e-10);

        // mixing two eigenvalues with a decent gap: gradient does not vanish
        int hi = n - 1;
        while (hi > 1 && dec.eigenvalues[hi] - dec.eigenvalues[0] < 1e-3) --hi;
        Tensor y(n, 1);
        for (int i = 0; i < n; ++i) y(i, 0) = dec.vectors[0][i] + dec.vectors[hi][i];
        CHECK(std::sqrt(rq_gradient(y, lap).frobenius_norm_sq()) > 1e-8);
    }
}

TEST_CASE("weight_of_eta: limits, canonical choice, monotonicity, domain") {
    CHECK(weight_of_eta(0.0, 0.3, 5.0) == 0.0);

    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const double rq = std::uniform_real_distribution<double>(0.0, 1.999)(rng);
        const double norm_sq = std::uniform_real_distribution<double>(0.1, 50.0)(rng);
        const double canonical = norm_sq / (2.0 - rq);
        CHECK(weight_of_eta(canonical, rq, norm_sq) == doctest::Approx(1.0).epsilon(1e-12));
    }

    CHECK(weight_of_eta(1.0, 0.5, 10.0) < weight_of_eta(5.0, 0.5, 10.0));
    CHECK(weight_of_eta(5.0, 0.5, 10.0) < weight_of_eta(15.0, 0.5, 10.0));

    // strict monotonicity on a 50-point grid of the valid domain
    for (double rq : {0.4, 1.3}) {
        const double norm_sq = 10.0;
        const double upper = rq < 1.0 ? norm_sq / (1.0 - rq) * 0.999 : 200.0;
        double prev = 0.0;
        for (int k = 1; k <= 50; ++k) {
            const double eta = upper * k / 50.0;
            const double w = weight_of_eta(eta, rq, norm_sq);
            CHECK(w > prev);
            prev = w;
        }
    }

    CHECK_THROWS_WITH_AS(weight_of_eta(100.0, 0.5, 10.0), doctest::Contains("below"),
                         std::invalid_argument);
    CHECK_THROWS_AS(weight_of_eta(-1.0, 0.5, 10.0), std::invalid_argument);
}
