#include <doctest.h>

#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "fibcast/common.hpp"
#include "fibcast/preprocess.hpp"
#include "fibcast/svr.hpp"
#include "helpers.hpp"

using namespace fibcast;
using namespace fibcast::svr;

namespace {

data::FeatureMatrix standardized(data::FeatureMatrix m) {
    m.standardized = true;
    return m;
}

// ------------------------------------------------------------------
// Exhaustive active-set reference for tiny dual problems. Every point is
// assigned a status (zero, free with fixed sign, or clamped at a bound);
// each assignment yields a linear system whose KKT-consistent solutions
// are enumerated and the best feasible objective kept.
// ------------------------------------------------------------------

bool solve_linear(std::vector<std::vector<double>> A, std::vector<double> b,
                  std::vector<double>& out) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
        }
        if (std::abs(A[piv][col]) < 1e-12) return false;
        std::swap(A[piv], A[col]);
        std::swap(b[piv], b[col]);
        for (std::size_t r = 0; r < n; ++r) {
            if (r == col) continue;
            const double f = A[r][col] / A[col][col];
            for (std::size_t cc = col; cc < n; ++cc) A[r][cc] -= f * A[col][cc];
            b[r] -= f * b[col];
        }
    }
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = b[i] / A[i][i];
    return true;
}

double exhaustive_dual_optimum(const std::vector<double>& K, const std::vector<double>& y,
                               double eps, double c) {
    const std::size_t n = y.size();
    double best = -std::numeric_limits<double>::infinity();

    std::vector<int> status(n, 0); // 0 zero, 1 free+, 2 free-, 3 at +C, 4 at -C
    std::size_t n_configs = 1;
    for (std::size_t i = 0; i < n; ++i) n_configs *= 5;

    for (std::size_t cfg = 0; cfg < n_configs; ++cfg) {
        std::size_t code = cfg;
        for (std::size_t i = 0; i < n; ++i) {
            status[i] = static_cast<int>(code % 5);
            code /= 5;
        }
        std::vector<std::size_t> free;
        std::vector<double> beta(n, 0.0);
        double fixed_sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (status[i] == 1 || status[i] == 2) {
                free.push_back(i);
            } else if (status[i] == 3) {
                beta[i] = c;
                fixed_sum += c;
            } else if (status[i] == 4) {
                beta[i] = -c;
                fixed_sum -= c;
            }
        }

        double lambda = 0.0;
        if (!free.empty()) {
            const std::size_t k = free.size();
            std::vector<std::vector<double>> A(k + 1, std::vector<double>(k + 1, 0.0));
            std::vector<double> rhs(k + 1, 0.0);
            for (std::size_t a = 0; a < k; ++a) {
                const std::size_t i = free[a];
                const double sign = status[i] == 1 ? 1.0 : -1.0;
                for (std::size_t b2 = 0; b2 < k; ++b2) A[a][b2] = K[i * n + free[b2]];
                A[a][k] = 1.0; // lambda
                double r = y[i] - eps * sign;
                for (std::size_t j = 0; j < n; ++j) {
                    if (status[j] == 3 || status[j] == 4) r -= K[i * n + j] * beta[j];
                }
                rhs[a] = r;
            }
            for (std::size_t b2 = 0; b2 < k; ++b2) A[k][b2] = 1.0;
            rhs[k] = -fixed_sum;
            std::vector<double> sol;
            if (!solve_linear(A, rhs, sol)) continue;
            bool ok = true;
            for (std::size_t a = 0; a < k; ++a) {
                const std::size_t i = free[a];
                const double sign = status[i] == 1 ? 1.0 : -1.0;
                if (sol[a] * sign < 1e-10 || std::abs(sol[a]) > c + 1e-9) ok = false;
                beta[i] = sol[a];
            }
            if (!ok) continue;
            lambda = sol[k];
        } else {
            if (std::abs(fixed_sum) > 1e-9) continue;
            // lambda must fall in the interval the inequalities admit
            double lb = -std::numeric_limits<double>::infinity();
            double ub = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                double g = 0.0;
                for (std::size_t j = 0; j < n; ++j) g += K[i * n + j] * beta[j];
                const double u = y[i] - g;
                if (status[i] == 0) {
                    lb = std::max(lb, u - eps);
                    ub = std::min(ub, u + eps);
                } else if (status[i] == 3) {
                    ub = std::min(ub, u - eps);
                } else {
                    lb = std::max(lb, u + eps);
                }
            }
            if (lb > ub + 1e-9) continue;
            lambda = 0.5 * (lb + ub);
        }

        // remaining KKT inequalities
        bool feasible = true;
        for (std::size_t i = 0; i < n && feasible; ++i) {
            double g = 0.0;
            for (std::size_t j = 0; j < n; ++j) g += K[i * n + j] * beta[j];
            const double r = y[i] - g - lambda;
            if (status[i] == 0 && std::abs(r) > eps + 1e-7) feasible = false;
            if (status[i] == 3 && r < eps - 1e-7) feasible = false;
            if (status[i] == 4 && r > -eps + 1e-7) feasible = false;
        }
        if (!feasible) continue;

        best = std::max(best, dual_objective(K, y, eps, beta));
    }
    return best;
}

} // namespace

TEST_CASE("rbf kernel basics") {
    const std::vector<double> x = {0.3, -0.7};
    const std::vector<double> z = {1.0, 1.0};
    CHECK(rbf_kernel(x, x, 0.7) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(rbf_kernel(x, z, 0.7) == doctest::Approx(rbf_kernel(z, x, 0.7)).epsilon(1e-15));
    const std::vector<double> a = {0.0, 0.0};
    const std::vector<double> b = {1.0, 1.0};
    CHECK(rbf_kernel(a, b, 0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
    CHECK_THROWS_AS(rbf_kernel(a, std::vector<double>{1.0}, 0.5), ShapeError);
}

TEST_CASE("kernel matrix parallel path equals serial path") {
    rng::Rng r(4);
    const auto X = standardized(testutil::random_matrix(r, 80, 3));
    const auto a = rbf_kernel_matrix_serial(X, 0.4);
    const auto b = rbf_kernel_matrix(X, 0.4);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("fit_svr refuses non-standardized input") {
    rng::Rng r(1);
    const auto X = testutil::random_matrix(r, 10, 2);
    std::vector<double> y(10, 1.0);
    CHECK_THROWS_AS(fit_svr(X, y, Config{}), PipelineError);
}

TEST_CASE("constant target: no support vectors, bias equals the constant") {
    rng::Rng r(2);
    const auto X = standardized(testutil::random_matrix(r, 12, 2));
    std::vector<double> y(12, 1.7);
    Config cfg;
    cfg.epsilon = 0.2;
    cfg.c = 5.0;
    const auto m = fit_svr(X, y, cfg);
    CHECK(m.support.empty());
    CHECK(m.bias == doctest::Approx(1.7).epsilon(1e-9));
    CHECK(predict_svr(m, X.row(0)) == doctest::Approx(1.7));
}

TEST_CASE("tube wider than the data spread swallows everything") {
    // y = x on five standardized points
    data::FeatureMatrix X = testutil::matrix(
        {"a"}, {{-1.2649110640673518}, {-0.6324555320336759}, {0.0},
                {0.6324555320336759}, {1.2649110640673518}});
    X.standardized = true;
    std::vector<double> y = {-1.26, -0.63, 0.0, 0.63, 1.26};
    Config cfg;
    cfg.epsilon = 3.0; // larger than the spread
    cfg.c = 10.0;
    const auto m = fit_svr(X, y, cfg);
    CHECK(m.support.empty());
    const double mean = (-1.26 - 0.63 + 0.0 + 0.63 + 1.26) / 5.0;
    CHECK(m.bias == doctest::Approx(mean).epsilon(1e-9));
}

TEST_CASE("post-fit KKT structure on random problems") {
    rng::Rng r(33);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 8 + r.index(17);
        auto X = standardized(testutil::random_matrix(r, n, 2));
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            y[i] = std::sin(2.0 * X.at(i, 0)) + 0.3 * X.at(i, 1) + 0.1 * r.normal();
        }
        Config cfg;
        cfg.epsilon = 0.15;
        cfg.c = 3.0;
        cfg.gamma = 0.8;
        cfg.tol = 1e-4;
        FitReport rep_out;
        const auto m = fit_svr(X, y, cfg, &rep_out);
        CHECK(rep_out.kkt_violation <= cfg.tol);

        double beta_sum = 0.0;
        for (const double b : m.beta) {
            beta_sum += b;
            CHECK(std::abs(b) <= cfg.c + 1e-9);
        }
        CHECK_NEAR(beta_sum, 0.0, 1e-8);

        // in-tube points carry zero coefficients: every support vector must
        // sit on or outside the tube boundary (within tol)
        for (std::size_t i = 0; i < n; ++i) {
            const double resid = std::abs(y[i] - predict_svr(m, X.row(i)));
            bool is_support = false;
            for (const auto& sv : m.support) {
                bool same = true;
                for (std::size_t c2 = 0; c2 < X.n_cols; ++c2) {
                    if (sv[c2] != X.at(i, c2)) same = false;
                }
                if (same) is_support = true;
            }
            if (resid < cfg.epsilon - cfg.tol) CHECK_FALSE(is_support);
        }
    }
}

TEST_CASE("dual objective matches the exhaustive active-set reference") {
    rng::Rng r(71);
    for (int rep = 0; rep < 12; ++rep) {
        const std::size_t n = 6;
        auto X = standardized(testutil::random_matrix(r, n, 2));
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = r.uniform(-1.5, 1.5);
        Config cfg;
        cfg.epsilon = 0.25;
        cfg.c = 2.0;
        cfg.gamma = 0.6;
        cfg.tol = 1e-9;
        FitReport rep_out;
        fit_svr(X, y, cfg, &rep_out);
        const auto K = rbf_kernel_matrix_serial(X, cfg.gamma);
        const double reference = exhaustive_dual_optimum(K, y, cfg.epsilon, cfg.c);
        REQUIRE(std::isfinite(reference));
        CHECK_NEAR(rep_out.dual, reference, 1e-6);
    }
}

TEST_CASE("predict_svr degenerate forms") {
    Model m;
    m.bias = 0.9;
    m.gamma = 1.0;
    CHECK(predict_svr(m, std::vector<double>{1.0, 2.0}) == 0.9);

    Model one;
    one.gamma = 0.5;
    one.bias = 0.0;
    one.support = {{0.3, -0.4}};
    one.beta = {1.0};
    CHECK(predict_svr(one, std::vector<double>{0.3, -0.4}) == doctest::Approx(1.0).epsilon(1e-12));

    Model sym;
    sym.gamma = 0.5;
    sym.bias = 0.35;
    sym.support = {{1.0}, {-1.0}};
    sym.beta = {1.0, -1.0};
    CHECK(predict_svr(sym, std::vector<double>{0.0}) == doctest::Approx(0.35).epsilon(1e-12));
}

TEST_CASE("svr model serialization round trip") {
    rng::Rng r(5);
    auto X = standardized(testutil::random_matrix(r, 15, 2));
    std::vector<double> y(15);
    for (std::size_t i = 0; i < 15; ++i) y[i] = X.at(i, 0) + 0.2 * r.normal();
    Config cfg;
    cfg.epsilon = 0.05;
    cfg.c = 4.0;
    const auto m = fit_svr(X, y, cfg);
    const auto back = Model::from_json(m.to_json());
    for (int i = 0; i < 50; ++i) {
        std::vector<double> x = {r.uniform(-1, 1), r.uniform(-1, 1)};
        CHECK(predict_svr(m, x) == predict_svr(back, x));
    }
    CHECK_THROWS_AS(Model::from_json("{"), ModelFormatError);
}

TEST_CASE("non-convergence carries the final KKT violation") {
    rng::Rng r(6);
    auto X = standardized(testutil::random_matrix(r, 30, 2));
    std::vector<double> y(30);
    for (std::size_t i = 0; i < 30; ++i) y[i] = 3.0 * std::sin(5.0 * X.at(i, 0)) + r.normal();
    Config cfg;
    cfg.epsilon = 0.01;
    cfg.c = 100.0;
    cfg.tol = 1e-10;
    cfg.max_passes = 3;
    CHECK_THROWS_AS(fit_svr(X, y, cfg), ConvergenceError);
}
