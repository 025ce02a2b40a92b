#include <doctest.h>

#include <cmath>
#include <numeric>

#include "fibcast/common.hpp"
#include "fibcast/eval.hpp"
#include "fibcast/pipeline.hpp"
#include "fibcast/preprocess.hpp"
#include "helpers.hpp"

using namespace fibcast;
using namespace fibcast::eval;

namespace {

// Pipeline that predicts its training mean everywhere.
Pipeline mean_pipeline() {
    Pipeline p;
    p.name = "mean";
    p.fit = [](const data::FeatureMatrix&, std::span<const double> y) -> Predictor {
        double mean = 0.0;
        for (const double v : y) mean += v;
        mean /= static_cast<double>(y.size());
        return [mean](const data::FeatureMatrix& X) {
            return std::vector<double>(X.n_rows, mean);
        };
    };
    return p;
}

Dataset linear_dataset(std::size_t n, std::uint64_t seed, double noise = 0.05) {
    rng::Rng r(seed);
    Dataset ds;
    ds.X = testutil::random_matrix(r, n, 3);
    ds.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ds.y[i] = 1.5 * ds.X.at(i, 0) - 0.7 * ds.X.at(i, 2) + noise * r.normal();
    }
    return ds;
}

Dataset site_dataset(const std::vector<std::string>& sites, int rows_per_site_per_year,
                     const std::vector<int>& years, std::uint64_t seed) {
    rng::Rng r(seed);
    Dataset ds;
    std::vector<std::vector<double>> rows;
    for (const auto& site : sites) {
        for (const int year : years) {
            for (int k = 0; k < rows_per_site_per_year; ++k) {
                data::SampleRecord rec;
                rec.site_id = site;
                rec.timestamp = testutil::ts(year, 6, 1 + k, 8, 0);
                ds.samples.push_back(rec);
                rows.push_back({r.uniform(-1, 1), r.uniform(-1, 1)});
            }
        }
    }
    ds.X = testutil::matrix({"f0", "f1"}, rows);
    ds.y.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        ds.y[i] = 2.0 * rows[i][0] + 0.05 * r.normal();
    }
    return ds;
}

} // namespace

TEST_CASE("r_squared fixed points") {
    CHECK(r_squared(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) ==
          doctest::Approx(1.0));
    CHECK(r_squared(std::vector<double>{1, 2, 3}, std::vector<double>{2, 2, 2}) ==
          doctest::Approx(0.0));
    CHECK(r_squared(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 4}) ==
          doctest::Approx(0.5).epsilon(1e-12));
    CHECK_THROWS_AS(r_squared(std::vector<double>{2, 2}, std::vector<double>{1, 2}), DomainError);
    // negative when worse than the mean predictor
    CHECK(r_squared(std::vector<double>{1, 2, 3}, std::vector<double>{3, 3, 0}) < 0.0);
}

TEST_CASE("rmse fixed points") {
    CHECK(rmse(std::vector<double>{1, 2}, std::vector<double>{1, 2}) == 0.0);
    CHECK(rmse(std::vector<double>{1, 2}, std::vector<double>{2, 3}) == doctest::Approx(1.0));
    CHECK(rmse(std::vector<double>{0, 0}, std::vector<double>{3, 4}) ==
          doctest::Approx(std::sqrt(12.5)).epsilon(1e-12));
}

TEST_CASE("spearman handles ties by average ranks") {
    CHECK(spearman_rho(std::vector<double>{1, 2, 3}, std::vector<double>{10, 20, 30}) ==
          doctest::Approx(1.0));
    CHECK(spearman_rho(std::vector<double>{1, 2, 3}, std::vector<double>{3, 2, 1}) ==
          doctest::Approx(-1.0));
    // a=(1,2,2,4) ranks (1, 2.5, 2.5, 4); b=(1,3,2,4) ranks (1,3,2,4)
    // Pearson of those ranks = 1.125 / sqrt(1.125 * 1.25)
    const double expect = 1.125 / std::sqrt(1.125 * 1.25);
    CHECK(spearman_rho(std::vector<double>{1, 2, 2, 4}, std::vector<double>{1, 3, 2, 4}) ==
          doctest::Approx(expect).epsilon(1e-12));
    CHECK(expect == doctest::Approx(0.9486832980505138).epsilon(1e-12));
    CHECK_THROWS_AS(spearman_rho(std::vector<double>{1, 1}, std::vector<double>{1, 2}),
                    DomainError);
}

TEST_CASE("rmse zero iff r2 one") {
    rng::Rng r(5);
    for (int rep = 0; rep < 20; ++rep) {
        std::vector<double> y(10), p(10);
        for (std::size_t i = 0; i < 10; ++i) {
            y[i] = r.uniform(-1, 1);
            p[i] = r.uniform01() < 0.5 ? y[i] : y[i] + r.uniform(-1, 1);
        }
        const bool zero = rmse(y, p) == 0.0;
        const bool one = r_squared(y, p) == 1.0;
        CHECK(zero == one);
    }
}

TEST_CASE("kfold: mean pipeline cannot beat the fold means") {
    const auto ds = linear_dataset(60, 3);
    const auto report = kfold_cv(mean_pipeline(), ds, 10, 42);
    REQUIRE(report.folds.size() == 10);
    CHECK(report.mean.r2 <= 0.0);
}

TEST_CASE("kfold partitions rows into near-equal disjoint folds") {
    const auto ds = linear_dataset(47, 9);
    const auto report = kfold_cv(mean_pipeline(), ds, 10, 7);
    std::vector<int> counts(10, 0);
    for (const int f : report.fold_of_row) {
        REQUIRE(f >= 0);
        REQUIRE(f < 10);
        ++counts[static_cast<std::size_t>(f)];
    }
    const auto [lo, hi] = std::minmax_element(counts.begin(), counts.end());
    CHECK(*hi - *lo <= 1);
    CHECK(std::accumulate(counts.begin(), counts.end(), 0) == 47);
}

TEST_CASE("kfold shuffle is seed-deterministic") {
    const auto ds = linear_dataset(40, 11);
    const auto a = kfold_cv(mean_pipeline(), ds, 5, 123);
    const auto b = kfold_cv(mean_pipeline(), ds, 5, 123);
    const auto c = kfold_cv(mean_pipeline(), ds, 5, 124);
    CHECK(a.fold_of_row == b.fold_of_row);
    CHECK(a.fold_of_row != c.fold_of_row);
}

TEST_CASE("leave-one-out degenerates to pooled scoring") {
    const auto ds = linear_dataset(12, 21);
    const auto report = kfold_cv(mean_pipeline(), ds, 12, 5);
    CHECK(report.pooled);
    REQUIRE(report.folds.size() == 1);
    CHECK_FALSE(report.stddev.has_value());
    CHECK(report.folds.front().rmse > 0.0);
}

TEST_CASE("a real pipeline learns the linear signal under kfold") {
    const auto ds = linear_dataset(120, 33, 0.1);
    auto spec = pipeline::ModelSpec::preset(pipeline::Family::CbLike, 1);
    spec.tree.n_estimators = 120;
    spec.tree.max_depth = 3;
    const auto report = kfold_cv(pipeline::make_pipeline(spec), ds, 5, 42);
    CHECK(report.mean.r2 > 0.5);
    CHECK(report.stddev.has_value());
}

TEST_CASE("deliberate leakage attempt aborts the evaluation") {
    const auto ds = linear_dataset(30, 8);
    Pipeline evil;
    evil.name = "leaky";
    // captures the full matrix and fits its scaler on all rows, test rows
    // included
    evil.fit = [&ds](const data::FeatureMatrix&, std::span<const double>) -> Predictor {
        const auto scaler = preprocess::fit_standardizer(ds.X);
        return [](const data::FeatureMatrix& X) {
            return std::vector<double>(X.n_rows, 0.0);
        };
    };
    CHECK_THROWS_AS(kfold_cv(evil, ds, 5, 1), LeakageError);
}

TEST_CASE("spatial holdout: duplicated site reproduces training metrics") {
    // holdout site's rows are copies of a training site's rows
    auto ds = site_dataset({"A", "B"}, 10, {2019}, 3);
    for (std::size_t i = 0; i < 10; ++i) {
        data::SampleRecord rec = ds.samples[i];
        rec.site_id = "C";
        ds.samples.push_back(rec);
        std::vector<double> row(ds.X.row(i).begin(), ds.X.row(i).end());
        ds.X.values.insert(ds.X.values.end(), row.begin(), row.end());
        ds.X.row_ids.push_back(ds.X.n_rows);
        ++ds.X.n_rows;
        ds.y.push_back(ds.y[i]);
    }

    auto spec = pipeline::ModelSpec::preset(pipeline::Family::CbLike, 2);
    spec.tree.n_estimators = 60;
    spec.tree.max_depth = 4;
    const auto report = spatial_holdout(pipeline::make_pipeline(spec), ds, "C");
    CHECK_FALSE(report.stddev.has_value());
    CHECK(report.n_test == 10);
    CHECK(report.n_train == 20);

    // training-set predictions on rows 0..9 equal holdout predictions
    const auto fitted = pipeline::fit(spec, ds.X.select_rows([] {
        std::vector<std::size_t> v(20);
        std::iota(v.begin(), v.end(), std::size_t{0});
        return v;
    }()),
                                      std::span<const double>(ds.y.data(), 20));
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(report.predictions[i].y_pred ==
              doctest::Approx(fitted.predict(ds.X.select_rows({i})).front()).epsilon(1e-9));
    }
}

TEST_CASE("spatial holdout: unknown site is an input error") {
    const auto ds = site_dataset({"A", "B"}, 5, {2019}, 4);
    CHECK_THROWS_AS(spatial_holdout(mean_pipeline(), ds, "ZZ"), ConfigError);
}

TEST_CASE("temporal holdout trains strictly before the cutoff") {
    const auto ds = site_dataset({"A", "B", "C"}, 5, {2018, 2019, 2020}, 6);
    auto spec = pipeline::ModelSpec::preset(pipeline::Family::CbLike, 3);
    spec.tree.n_estimators = 40;
    spec.tree.max_depth = 3;
    const auto report =
        temporal_holdout(pipeline::make_pipeline(spec), ds, 2020, {"B", "A"}, 2020);
    CHECK(report.n_train == 30); // 3 sites x 5 rows x 2 years
    CHECK(report.n_test == 10);
    // grouped by requested site order, chronological within
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(ds.samples[report.predictions[i].row_id].site_id == "B");
    }
    for (std::size_t i = 5; i < 10; ++i) {
        CHECK(ds.samples[report.predictions[i].row_id].site_id == "A");
    }
    for (std::size_t i = 1; i < 5; ++i) {
        CHECK(ds.samples[report.predictions[i].row_id].timestamp >
              ds.samples[report.predictions[i - 1].row_id].timestamp);
    }
}

TEST_CASE("temporal holdout: missing test year is an input error") {
    const auto ds = site_dataset({"A"}, 5, {2018, 2019}, 6);
    CHECK_THROWS_AS(temporal_holdout(mean_pipeline(), ds, 2019, {"A"}, 2022), ConfigError);
    CHECK_THROWS_AS(temporal_holdout(mean_pipeline(), ds, 2017, {"A"}, 2018), ConfigError);
}

TEST_CASE("temporal holdout notes sites absent before the cutoff") {
    auto ds = site_dataset({"A", "B"}, 4, {2018, 2019, 2020}, 10);
    // site L exists only in 2020
    for (int k = 0; k < 4; ++k) {
        data::SampleRecord rec;
        rec.site_id = "L";
        rec.timestamp = testutil::ts(2020, 7, 1 + k, 9, 0);
        ds.samples.push_back(rec);
        ds.X.values.insert(ds.X.values.end(), {0.1 * k, -0.1 * k});
        ds.X.row_ids.push_back(ds.X.n_rows);
        ++ds.X.n_rows;
        ds.y.push_back(0.0);
    }
    const auto report = temporal_holdout(mean_pipeline(), ds, 2020, {"A"}, 2020);
    CHECK(report.notes.find("L") != std::string::npos);
    CHECK(report.n_train == 16); // 2 sites x 4 rows x 2 pre-cutoff years
}

TEST_CASE("eval report serializes with stddev only when present") {
    const auto ds = linear_dataset(30, 12);
    const auto cv = kfold_cv(mean_pipeline(), ds, 5, 2);
    const std::string j = cv.to_json();
    CHECK(j.find("\"stddev\"") != std::string::npos);
    const auto sp = site_dataset({"A", "B"}, 5, {2019}, 4);
    const auto hold = spatial_holdout(mean_pipeline(), sp, "B");
    CHECK(hold.to_json().find("\"stddev\"") == std::string::npos);
}
