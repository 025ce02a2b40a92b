#ifndef FIBCAST_EVAL_HPP
#define FIBCAST_EVAL_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fibcast/features.hpp"
#include "fibcast/metrics.hpp"
#include "fibcast/samples.hpp"

namespace fibcast::eval {

// Aligned rows: samples[i] describes X row i and target y[i] (already on
// the transformed scale). samples may be empty for protocols that do not
// need site/time information (plain k-fold).
struct Dataset {
    std::vector<data::SampleRecord> samples;
    data::FeatureMatrix X;
    std::vector<double> y;

    void validate(bool need_samples) const;
};

using Predictor = std::function<std::vector<double>(const data::FeatureMatrix&)>;

// fit returns a predictor; protocols call fit on training rows only, with
// the leakage scope armed around the call.
struct Pipeline {
    std::string name;
    std::function<Predictor(const data::FeatureMatrix&, std::span<const double>)> fit;
};

struct FoldMetrics {
    double r2 = 0.0;
    double rmse = 0.0;
    double spearman = 0.0;
};

struct PredictionRow {
    std::size_t row_id = 0;
    int fold = 0;
    double y_true = 0.0;
    double y_pred = 0.0;
};

struct EvalReport {
    std::string protocol;
    std::vector<FoldMetrics> folds;       // one entry per fold / split
    FoldMetrics mean;
    std::optional<FoldMetrics> stddev;    // absent for single-split protocols
    bool pooled = false;                  // degenerate folds scored once, pooled
    std::vector<int> fold_of_row;         // dataset row -> test fold (-1: never tested)
    std::vector<PredictionRow> predictions;
    std::size_t n_train = 0;              // single-split protocols
    std::size_t n_test = 0;
    std::string notes;

    std::string to_json() const;
};

// Shuffled k-fold with fold sizes differing by at most one. Standardizers
// and models fit inside the training folds only; the leakage guard aborts
// anything else.
EvalReport kfold_cv(const Pipeline& pipeline, const Dataset& ds, int k, std::uint64_t seed);

// Train on all other sites, test on every row of holdout_site.
EvalReport spatial_holdout(const Pipeline& pipeline, const Dataset& ds,
                           const std::string& holdout_site);

// Train on rows with year < cutoff_year, test on test_sites at test_year.
// Test predictions are reported site by site in the given order,
// chronological within each site.
EvalReport temporal_holdout(const Pipeline& pipeline, const Dataset& ds, int cutoff_year,
                            const std::vector<std::string>& test_sites, int test_year);

} // namespace fibcast::eval

#endif
