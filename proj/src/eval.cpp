#include "fibcast/eval.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "fibcast/common.hpp"
#include "fibcast/leakage.hpp"
#include "fibcast/rng.hpp"
#include "fibcast/time.hpp"

namespace fibcast::eval {

using json = nlohmann::ordered_json;

void Dataset::validate(bool need_samples) const {
    if (X.n_rows != y.size()) {
        throw ShapeError("dataset: |y| must equal rows(X)");
    }
    if (X.row_ids.size() != X.n_rows) {
        throw ShapeError("dataset: matrix must carry row ids");
    }
    if (need_samples && samples.size() != X.n_rows) {
        throw ShapeError("dataset: protocol needs one sample record per row");
    }
}

namespace {

std::vector<double> gather(std::span<const double> v, const std::vector<std::size_t>& idx) {
    std::vector<double> out;
    out.reserve(idx.size());
    for (const std::size_t i : idx) out.push_back(v[i]);
    return out;
}

FoldMetrics score(std::span<const double> y_true, std::span<const double> y_pred) {
    FoldMetrics m;
    m.r2 = r_squared(y_true, y_pred);
    m.rmse = eval::rmse(y_true, y_pred);
    // A constant predictor (the mean baseline, or a stump that never
    // splits) has no rank association at all; score it as 0 rather than
    // aborting the protocol. Constant y_true still raises via r_squared.
    bool pred_constant = true;
    for (std::size_t i = 1; i < y_pred.size(); ++i) {
        if (y_pred[i] != y_pred[0]) pred_constant = false;
    }
    m.spearman = pred_constant ? 0.0 : spearman_rho(y_true, y_pred);
    return m;
}

// Fits on the training rows with the guard armed, then predicts test rows.
std::vector<double> run_split(const Pipeline& pipeline, const Dataset& ds,
                              const std::vector<std::size_t>& train,
                              const std::vector<std::size_t>& test) {
    const data::FeatureMatrix X_train = ds.X.select_rows(train);
    const std::vector<double> y_train = gather(ds.y, train);

    std::vector<std::size_t> held_out;
    held_out.reserve(test.size());
    for (const std::size_t t : test) held_out.push_back(ds.X.row_ids[t]);

    Predictor predictor;
    {
        leakage::Scope guard(std::move(held_out));
        predictor = pipeline.fit(X_train, y_train);
    }
    return predictor(ds.X.select_rows(test));
}

void fill_mean_std(EvalReport& report) {
    const std::size_t k = report.folds.size();
    FoldMetrics mean;
    for (const auto& f : report.folds) {
        mean.r2 += f.r2;
        mean.rmse += f.rmse;
        mean.spearman += f.spearman;
    }
    mean.r2 /= static_cast<double>(k);
    mean.rmse /= static_cast<double>(k);
    mean.spearman /= static_cast<double>(k);
    report.mean = mean;
    if (k > 1) {
        FoldMetrics sd;
        for (const auto& f : report.folds) {
            sd.r2 += (f.r2 - mean.r2) * (f.r2 - mean.r2);
            sd.rmse += (f.rmse - mean.rmse) * (f.rmse - mean.rmse);
            sd.spearman += (f.spearman - mean.spearman) * (f.spearman - mean.spearman);
        }
        sd.r2 = std::sqrt(sd.r2 / static_cast<double>(k));
        sd.rmse = std::sqrt(sd.rmse / static_cast<double>(k));
        sd.spearman = std::sqrt(sd.spearman / static_cast<double>(k));
        report.stddev = sd;
    }
}

json metrics_json(const FoldMetrics& m) {
    json j;
    j["r2"] = m.r2;
    j["rmse"] = m.rmse;
    j["spearman"] = m.spearman;
    return j;
}

} // namespace

EvalReport kfold_cv(const Pipeline& pipeline, const Dataset& ds, int k, std::uint64_t seed) {
    ds.validate(false);
    if (k < 2) throw ConfigError("kfold_cv: k must be >= 2");
    const std::size_t n = ds.X.n_rows;
    if (n < static_cast<std::size_t>(k)) {
        throw ConfigError("kfold_cv: fewer rows than folds");
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng::Rng shuffler(seed);
    shuffler.shuffle(order);

    // contiguous blocks of the shuffled order; sizes differ by at most one
    std::vector<std::vector<std::size_t>> folds(static_cast<std::size_t>(k));
    for (std::size_t i = 0; i < n; ++i) {
        folds[i % static_cast<std::size_t>(k)].push_back(order[i]);
    }

    EvalReport report;
    report.protocol = "kfold(k=" + std::to_string(k) + ",seed=" + std::to_string(seed) + ")";
    report.fold_of_row.assign(n, -1);

    bool degenerate = false;
    for (const auto& f : folds) {
        if (f.size() < 2) degenerate = true;
    }

    std::vector<double> pooled_true, pooled_pred;
    std::vector<PredictionRow> preds(n);
    for (int fi = 0; fi < k; ++fi) {
        const auto& test = folds[static_cast<std::size_t>(fi)];
        std::vector<std::size_t> train;
        train.reserve(n - test.size());
        for (int fj = 0; fj < k; ++fj) {
            if (fj == fi) continue;
            const auto& other = folds[static_cast<std::size_t>(fj)];
            train.insert(train.end(), other.begin(), other.end());
        }
        std::sort(train.begin(), train.end());

        const auto y_pred = run_split(pipeline, ds, train, test);
        const auto y_true = gather(ds.y, test);
        for (std::size_t i = 0; i < test.size(); ++i) {
            report.fold_of_row[test[i]] = fi;
            preds[test[i]] = {ds.X.row_ids[test[i]], fi, y_true[i], y_pred[i]};
            pooled_true.push_back(y_true[i]);
            pooled_pred.push_back(y_pred[i]);
        }
        if (!degenerate) {
            report.folds.push_back(score(y_true, y_pred));
        }
    }
    report.predictions = std::move(preds);

    if (degenerate) {
        // leave-one-out style folds: score the pooled out-of-fold
        // predictions once
        report.pooled = true;
        report.folds.push_back(score(pooled_true, pooled_pred));
        report.mean = report.folds.front();
    } else {
        fill_mean_std(report);
    }
    return report;
}

EvalReport spatial_holdout(const Pipeline& pipeline, const Dataset& ds,
                           const std::string& holdout_site) {
    ds.validate(true);
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        (ds.samples[i].site_id == holdout_site ? test : train).push_back(i);
    }
    if (test.empty()) {
        throw ConfigError("spatial_holdout: no rows for site '" + holdout_site + "'");
    }
    if (train.empty()) {
        throw ConfigError("spatial_holdout: no training rows outside site '" + holdout_site +
                          "'");
    }

    EvalReport report;
    report.protocol = "spatial(holdout=" + holdout_site + ")";
    report.fold_of_row.assign(ds.X.n_rows, -1);
    const auto y_pred = run_split(pipeline, ds, train, test);
    const auto y_true = gather(ds.y, test);
    for (std::size_t i = 0; i < test.size(); ++i) {
        report.fold_of_row[test[i]] = 0;
        report.predictions.push_back({ds.X.row_ids[test[i]], 0, y_true[i], y_pred[i]});
    }
    report.folds.push_back(score(y_true, y_pred));
    report.mean = report.folds.front();
    report.n_train = train.size();
    report.n_test = test.size();
    return report;
}

EvalReport temporal_holdout(const Pipeline& pipeline, const Dataset& ds, int cutoff_year,
                            const std::vector<std::string>& test_sites, int test_year) {
    ds.validate(true);
    if (test_sites.empty()) throw ConfigError("temporal_holdout: no test sites given");

    std::set<std::string> all_sites, trained_sites;
    std::vector<std::size_t> train;
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        all_sites.insert(ds.samples[i].site_id);
        if (timeutil::year_of(ds.samples[i].timestamp) < cutoff_year) {
            train.push_back(i);
            trained_sites.insert(ds.samples[i].site_id);
        }
    }
    if (train.empty()) {
        throw ConfigError("temporal_holdout: no rows before cutoff year " +
                          std::to_string(cutoff_year));
    }
    // Sites with no record before the cutoff simply cannot contribute
    // training rows; surface which ones those were.
    std::string excluded;
    for (const auto& s : all_sites) {
        if (!trained_sites.count(s)) {
            excluded += (excluded.empty() ? "" : ", ") + s;
        }
    }

    // test rows grouped by requested site order, chronological within site
    std::vector<std::size_t> test;
    for (const auto& site : test_sites) {
        std::vector<std::size_t> rows;
        for (std::size_t i = 0; i < ds.samples.size(); ++i) {
            if (ds.samples[i].site_id == site &&
                timeutil::year_of(ds.samples[i].timestamp) == test_year) {
                rows.push_back(i);
            }
        }
        if (rows.empty()) {
            throw ConfigError("temporal_holdout: site '" + site + "' has no rows in year " +
                              std::to_string(test_year));
        }
        std::sort(rows.begin(), rows.end(), [&](std::size_t a, std::size_t b) {
            return ds.samples[a].timestamp < ds.samples[b].timestamp;
        });
        test.insert(test.end(), rows.begin(), rows.end());
    }

    EvalReport report;
    report.protocol = "temporal(cutoff=" + std::to_string(cutoff_year) +
                      ",test_year=" + std::to_string(test_year) + ")";
    if (!excluded.empty()) {
        report.notes = "sites without pre-cutoff data excluded from training: " + excluded;
    }
    report.fold_of_row.assign(ds.X.n_rows, -1);
    const auto y_pred = run_split(pipeline, ds, train, test);
    const auto y_true = gather(ds.y, test);
    for (std::size_t i = 0; i < test.size(); ++i) {
        report.fold_of_row[test[i]] = 0;
        report.predictions.push_back({ds.X.row_ids[test[i]], 0, y_true[i], y_pred[i]});
    }
    report.folds.push_back(score(y_true, y_pred));
    report.mean = report.folds.front();
    report.n_train = train.size();
    report.n_test = test.size();
    return report;
}

std::string EvalReport::to_json() const {
    json doc;
    doc["format"] = "fibcast-eval-report";
    doc["version"] = 1;
    doc["protocol"] = protocol;
    doc["pooled"] = pooled;
    doc["folds"] = json::array();
    for (const auto& f : folds) doc["folds"].push_back(metrics_json(f));
    doc["mean"] = metrics_json(mean);
    if (stddev) {
        doc["stddev"] = metrics_json(*stddev);
    }
    if (n_train || n_test) {
        doc["n_train"] = n_train;
        doc["n_test"] = n_test;
    }
    if (!notes.empty()) doc["notes"] = notes;
    doc["fold_of_row"] = fold_of_row;
    return doc.dump(2) + "\n";
}

} // namespace fibcast::eval
