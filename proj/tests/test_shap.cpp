#include <doctest.h>

#include <cmath>

#include "fibcast/common.hpp"
#include "fibcast/shap.hpp"
#include "helpers.hpp"

using namespace fibcast;
using testutil::random_tree;

namespace {

tree::Tree stump(int feature, double threshold, double left_value, double right_value,
                 std::int64_t left_cover, std::int64_t right_cover) {
    tree::Tree t;
    t.nodes.resize(3);
    t.nodes[0].feature = feature;
    t.nodes[0].threshold = threshold;
    t.nodes[0].left = 1;
    t.nodes[0].right = 2;
    t.nodes[0].cover = left_cover + right_cover;
    t.nodes[1].value = left_value;
    t.nodes[1].cover = left_cover;
    t.nodes[2].value = right_value;
    t.nodes[2].cover = right_cover;
    return t;
}

tree::Ensemble single(tree::Tree t, int n_features) {
    tree::Ensemble ens;
    ens.mode = tree::CombineMode::Average;
    ens.n_features = n_features;
    ens.trees.push_back(std::move(t));
    return ens;
}

} // namespace

TEST_CASE("conditional expectation: full conditioning equals prediction") {
    const auto t = stump(0, 0.5, 1.0, 3.0, 40, 60);
    const std::vector<double> x = {0.2, 9.9};
    CHECK(shap::tree_conditional_expectation(t, x, {true, true}) ==
          doctest::Approx(predict_tree(t, x)).epsilon(1e-12));
}

TEST_CASE("conditional expectation: empty subset weights by cover") {
    // covers 30/70 with leaves 0 and 1 -> 0.7
    const auto t = stump(0, 0.0, 0.0, 1.0, 30, 70);
    const std::vector<double> x = {-1.0};
    CHECK(shap::tree_conditional_expectation(t, x, {false}) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("conditional expectation: single leaf for any subset") {
    tree::Tree t;
    t.nodes.resize(1);
    t.nodes[0].value = 0.42;
    t.nodes[0].cover = 5;
    CHECK(shap::tree_conditional_expectation(t, std::vector<double>{1.0}, {false}) == 0.42);
    CHECK(shap::tree_conditional_expectation(t, std::vector<double>{1.0}, {true}) == 0.42);
}

TEST_CASE("conditional expectation: missing cover is a model-format error") {
    auto t = stump(0, 0.0, 0.0, 1.0, 30, 70);
    t.nodes[1].cover = 0;
    CHECK_THROWS_AS(shap::tree_conditional_expectation(t, std::vector<double>{0.0}, {false}),
                    ModelFormatError);
}

TEST_CASE("brute force: constant game has zero attributions") {
    tree::Tree t;
    t.nodes.resize(1);
    t.nodes[0].value = 0.7;
    t.nodes[0].cover = 10;
    const auto a = shap::brute_force_shap(single(std::move(t), 3), std::vector<double>{1, 2, 3});
    CHECK(a.base == doctest::Approx(0.7));
    for (const double p : a.phi) CHECK(p == doctest::Approx(0.0));
}

TEST_CASE("brute force: stump attributes only the split feature") {
    const auto ens = single(stump(1, 0.0, -1.0, 2.0, 25, 75), 3);
    const std::vector<double> x = {0.3, -0.5, 0.9};
    const auto a = shap::brute_force_shap(ens, x);
    CHECK(a.phi[0] == doctest::Approx(0.0));
    CHECK(a.phi[2] == doctest::Approx(0.0));
    const double base = 0.25 * -1.0 + 0.75 * 2.0;
    CHECK(a.base == doctest::Approx(base).epsilon(1e-12));
    CHECK(a.phi[1] == doctest::Approx(-1.0 - base).epsilon(1e-12));
}

TEST_CASE("brute force: two-feature depth-2 tree matches hand enumeration") {
    // Root splits f0 at 0 (left cover 4, right 6); left child splits f1 at 0
    // with leaves 1 (cover 1) and 5 (cover 3); right leaf 10.
    tree::Tree t;
    t.nodes.resize(5);
    t.nodes[0] = {0, 0.0, 1, 2, 0.0, 10};
    t.nodes[1] = {1, 0.0, 3, 4, 0.0, 4};
    t.nodes[2] = {-1, 0.0, -1, -1, 10.0, 6};
    t.nodes[3] = {-1, 0.0, -1, -1, 1.0, 1};
    t.nodes[4] = {-1, 0.0, -1, -1, 5.0, 3};
    const auto ens = single(std::move(t), 2);

    // x routes to the (f0<0, f1<0) leaf with value 1.
    const std::vector<double> x = {-1.0, -1.0};
    // v({})     = 0.4*(0.25*1 + 0.75*5) + 0.6*10 = 7.6
    // v({0})    = 0.25*1 + 0.75*5 = 4
    // v({1})    = 0.4*1 + 0.6*10 = 6.4
    // v({0,1})  = 1
    // phi_0 = 1/2 (v0 - v{}) + 1/2 (v01 - v1) = 1/2(4-7.6) + 1/2(1-6.4) = -4.5
    // phi_1 = 1/2 (v1 - v{}) + 1/2 (v01 - v0) = 1/2(6.4-7.6) + 1/2(1-4) = -2.1
    const auto a = shap::brute_force_shap(ens, x);
    CHECK(a.base == doctest::Approx(7.6).epsilon(1e-12));
    CHECK(a.phi[0] == doctest::Approx(-4.5).epsilon(1e-12));
    CHECK(a.phi[1] == doctest::Approx(-2.1).epsilon(1e-12));
    CHECK(a.prediction == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("tree_shap equals brute_force_shap on random trees") {
    rng::Rng rng(20240601);
    for (int rep = 0; rep < 60; ++rep) {
        const int m = 2 + static_cast<int>(rng.index(9)); // 2..10 features
        tree::Ensemble ens;
        ens.mode = tree::CombineMode::Additive;
        ens.base_score = rng.uniform(-1.0, 1.0);
        ens.learning_rate = 0.25 + 0.75 * rng.uniform01();
        ens.n_features = m;
        const int n_trees = 1 + static_cast<int>(rng.index(3));
        for (int k = 0; k < n_trees; ++k) {
            ens.trees.push_back(random_tree(rng, 4, m, 20 + static_cast<std::int64_t>(rng.index(200))));
        }
        for (int inst = 0; inst < 4; ++inst) {
            std::vector<double> x(static_cast<std::size_t>(m));
            for (auto& v : x) v = rng.uniform(-1.0, 1.0);
            const auto fast = shap::tree_shap(ens, x);
            const auto slow = shap::brute_force_shap(ens, x);
            for (int i = 0; i < m; ++i) {
                CHECK_NEAR(fast.phi[static_cast<std::size_t>(i)],
                           slow.phi[static_cast<std::size_t>(i)], 1e-9);
            }
            CHECK_NEAR(fast.base, slow.base, 1e-9);
            // local accuracy
            double sum = fast.base;
            for (const double p : fast.phi) sum += p;
            CHECK_NEAR(sum, fast.prediction, 1e-8);
        }
    }
}

TEST_CASE("tree_shap linearity: duplicated tree at half rate equals single tree") {
    rng::Rng rng(7);
    const auto t = random_tree(rng, 3, 4, 50);
    tree::Ensemble one;
    one.mode = tree::CombineMode::Additive;
    one.learning_rate = 1.0;
    one.n_features = 4;
    one.trees.push_back(t);

    tree::Ensemble two;
    two.mode = tree::CombineMode::Additive;
    two.learning_rate = 0.5;
    two.n_features = 4;
    two.trees.push_back(t);
    two.trees.push_back(t);

    const std::vector<double> x = {0.1, -0.4, 0.9, -0.2};
    const auto a1 = shap::tree_shap(one, x);
    const auto a2 = shap::tree_shap(two, x);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK_NEAR(a2.phi[i], a1.phi[i], 1e-12);
    }
    CHECK_NEAR(a2.base, a1.base, 1e-12);
}

TEST_CASE("tree_shap dummy property: unused features get exactly zero") {
    rng::Rng rng(99);
    const auto t = random_tree(rng, 4, 3, 64); // splits only on features 0..2
    tree::Ensemble ens = single(t, 6);         // but the model claims 6 features
    const std::vector<double> x = {0.5, -0.5, 0.1, 7.0, -3.0, 2.0};
    const auto a = shap::tree_shap(ens, x);
    CHECK(a.phi[3] == 0.0);
    CHECK(a.phi[4] == 0.0);
    CHECK(a.phi[5] == 0.0);
}

TEST_CASE("tree_shap symmetry: mirrored features with equal covers get equal phi") {
    // f0 and f1 in symmetric positions: root splits f0 (50/50), each child
    // splits f1 (25/25) with symmetric leaf values.
    tree::Tree t;
    t.nodes.resize(7);
    t.nodes[0] = {0, 0.0, 1, 2, 0.0, 100};
    t.nodes[1] = {1, 0.0, 3, 4, 0.0, 50};
    t.nodes[2] = {1, 0.0, 5, 6, 0.0, 50};
    t.nodes[3] = {-1, 0.0, -1, -1, 0.0, 25};
    t.nodes[4] = {-1, 0.0, -1, -1, 1.0, 25};
    t.nodes[5] = {-1, 0.0, -1, -1, 1.0, 25};
    t.nodes[6] = {-1, 0.0, -1, -1, 2.0, 25};
    const auto ens = single(std::move(t), 2);
    const auto a = shap::tree_shap(ens, std::vector<double>{-1.0, -1.0});
    CHECK_NEAR(a.phi[0], a.phi[1], 1e-12);
}

TEST_CASE("tree_shap local accuracy where prediction equals base") {
    // Balanced symmetric tree; x in the all-average cell.
    const auto t = stump(0, 0.0, -1.0, 1.0, 50, 50);
    const auto ens = single(t, 1);
    const auto a = shap::tree_shap(ens, std::vector<double>{-1.0});
    CHECK_NEAR(a.base, 0.0, 1e-12);
    CHECK_NEAR(a.base + a.phi[0], a.prediction, 1e-12);
}

TEST_CASE("mean_abs_shap ranks by mean magnitude with name tie-break") {
    std::vector<shap::Attribution> atts(2);
    atts[0].phi = {0.5, -2.0, 0.5};
    atts[1].phi = {-0.5, 1.0, 0.5};
    const auto r = shap::mean_abs_shap(atts, {"b", "a", "c"});
    REQUIRE(r.entries.size() == 3);
    CHECK(r.entries[0].first == "a");
    CHECK(r.entries[0].second == doctest::Approx(1.5));
    // b and c tie at 0.5 -> alphabetical
    CHECK(r.entries[1].first == "b");
    CHECK(r.entries[2].first == "c");
}

TEST_CASE("mean_abs_shap on zero attributions is alphabetical") {
    std::vector<shap::Attribution> atts(3);
    for (auto& a : atts) a.phi = {0.0, 0.0};
    const auto r = shap::mean_abs_shap(atts, {"z", "a"});
    CHECK(r.entries[0].first == "a");
    CHECK(r.entries[1].first == "z");
}

TEST_CASE("dependence_export copies values in input order") {
    const auto X = testutil::matrix({"s", "g"}, {{34.5, 100.0}, {36.0, 200.0}, {33.0, 50.0}});
    std::vector<shap::Attribution> atts(3);
    atts[0].phi = {0.1, 0.0};
    atts[1].phi = {-0.2, 0.0};
    atts[2].phi = {0.3, 0.0};
    const auto t = shap::dependence_export("s", "g", X, atts);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[0][0] == 34.5);
    CHECK(t.rows[0][1] == doctest::Approx(0.1));
    CHECK(t.rows[0][2] == 100.0);
    CHECK(t.rows[1][1] == doctest::Approx(-0.2));
    CHECK(t.rows[2][0] == 33.0);
}

TEST_CASE("dependence_export on empty matrix yields empty table") {
    auto X = testutil::matrix({"s", "g"}, {});
    const auto t = shap::dependence_export("s", "g", X, {});
    CHECK(t.rows.empty());
    CHECK(t.feature == "s");
}
