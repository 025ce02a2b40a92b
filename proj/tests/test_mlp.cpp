#include <doctest.h>

#include <cmath>

#include "fibcast/common.hpp"
#include "fibcast/mlp.hpp"
#include "helpers.hpp"

using namespace fibcast;
using namespace fibcast::mlp;

namespace {

data::FeatureMatrix standardized(data::FeatureMatrix m) {
    m.standardized = true;
    return m;
}

} // namespace

TEST_CASE("predict: all-zero weights output the output bias") {
    Config cfg;
    cfg.hidden = {3, 3};
    Model m = init_model(2, cfg);
    for (auto& w : m.weights) std::fill(w.begin(), w.end(), 0.0);
    m.biases.back()[0] = 0.77;
    CHECK(predict_mlp(m, std::vector<double>{1.0, -2.0}) == doctest::Approx(0.77));
}

TEST_CASE("predict: hand-computed 1-1-1 forward pass") {
    Config cfg;
    cfg.hidden = {1};
    Model m = init_model(1, cfg);
    m.weights[0] = {2.0};  // hidden = relu(2x + 1)
    m.biases[0] = {1.0};
    m.weights[1] = {-0.5}; // out = -0.5 h + 0.25
    m.biases[1] = {0.25};
    // x = 3: h = 7, out = -3.25
    CHECK(predict_mlp(m, std::vector<double>{3.0}) == doctest::Approx(-3.25).epsilon(1e-12));
    // x = -2: relu kills the hidden unit, out = bias path = 0.25... relu(2*-2+1)=0
    CHECK(predict_mlp(m, std::vector<double>{-2.0}) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("predict: dead ReLU path leaves only the output bias") {
    Config cfg;
    cfg.hidden = {4};
    Model m = init_model(2, cfg);
    for (auto& v : m.weights[0]) v = 1.0;
    std::fill(m.biases[0].begin(), m.biases[0].end(), -100.0); // all pre-activations negative
    for (auto& v : m.weights[1]) v = 3.0;
    m.biases[1][0] = -0.4;
    CHECK(predict_mlp(m, std::vector<double>{0.5, 0.5}) == doctest::Approx(-0.4));
}

TEST_CASE("analytic gradient matches central finite differences on a 2-3-3-1 net") {
    rng::Rng r(2024);
    const auto X = standardized(testutil::random_matrix(r, 12, 2));
    std::vector<double> y(12);
    for (auto& v : y) v = r.uniform(-1.0, 1.0);

    Config cfg;
    cfg.hidden = {3, 3};
    for (int point = 0; point < 10; ++point) {
        cfg.seed = 1000 + static_cast<std::uint64_t>(point);
        Model m = init_model(2, cfg);
        // random parameter point away from the ReLU kinks
        rng::Rng pr(77 + static_cast<std::uint64_t>(point));
        for (auto& w : m.weights) {
            for (auto& v : w) v = pr.uniform(-0.9, 0.9);
        }
        for (auto& b : m.biases) {
            for (auto& v : b) v = pr.uniform(-0.3, 0.3);
        }

        std::vector<std::vector<double>> gw, gb;
        loss_and_gradient(m, X, y, gw, gb);

        auto check_param = [&](double& slot, double analytic) {
            const double save = slot;
            const double scale = std::max(1.0, std::abs(save));
            const double h = 1e-6 * scale;
            slot = save + h;
            std::vector<std::vector<double>> t1, t2;
            const double up = loss_and_gradient(m, X, y, t1, t2);
            slot = save - h;
            const double dn = loss_and_gradient(m, X, y, t1, t2);
            slot = save;
            const double numeric = (up - dn) / (2.0 * h);
            const double denom = std::max({1e-8, std::abs(analytic), std::abs(numeric)});
            CHECK(std::abs(analytic - numeric) / denom < 1e-5);
        };

        for (std::size_t l = 0; l < m.weights.size(); ++l) {
            for (std::size_t i = 0; i < m.weights[l].size(); ++i) {
                check_param(m.weights[l][i], gw[l][i]);
            }
            for (std::size_t i = 0; i < m.biases[l].size(); ++i) {
                check_param(m.biases[l][i], gb[l][i]);
            }
        }
    }
}

TEST_CASE("training drives constant-target MSE below 1e-3 on 50 rows") {
    rng::Rng r(8);
    const auto X = standardized(testutil::random_matrix(r, 50, 3));
    std::vector<double> y(50, 0.6);
    Config cfg;
    cfg.hidden = {16, 16};
    cfg.max_epochs = 300;
    cfg.seed = 3;
    std::vector<double> losses;
    fit_mlp(X, y, cfg, &losses);
    REQUIRE(losses.size() == 300);
    CHECK(losses.back() < 1e-3);
}

TEST_CASE("same seed reproduces identical weights, different seed does not") {
    rng::Rng r(9);
    const auto X = standardized(testutil::random_matrix(r, 30, 2));
    std::vector<double> y(30);
    for (std::size_t i = 0; i < 30; ++i) y[i] = X.at(i, 0) - 0.5 * X.at(i, 1);
    Config cfg;
    cfg.hidden = {8};
    cfg.max_epochs = 10;
    cfg.seed = 42;
    const auto a = fit_mlp(X, y, cfg);
    const auto b = fit_mlp(X, y, cfg);
    CHECK(a.to_json() == b.to_json());
    cfg.seed = 43;
    const auto c = fit_mlp(X, y, cfg);
    CHECK(a.to_json() != c.to_json());
}

TEST_CASE("fit_mlp refuses non-standardized input") {
    rng::Rng r(1);
    const auto X = testutil::random_matrix(r, 10, 2);
    std::vector<double> y(10, 0.0);
    CHECK_THROWS_AS(fit_mlp(X, y, Config{}), PipelineError);
}

TEST_CASE("mlp serialization round trip") {
    Config cfg;
    cfg.hidden = {5, 4};
    Model m = init_model(3, cfg);
    const auto back = Model::from_json(m.to_json());
    rng::Rng r(2);
    for (int i = 0; i < 20; ++i) {
        std::vector<double> x = {r.uniform(-1, 1), r.uniform(-1, 1), r.uniform(-1, 1)};
        CHECK(predict_mlp(m, x) == predict_mlp(back, x));
    }
    CHECK_THROWS_AS(Model::from_json("[1,2"), ModelFormatError);
}
