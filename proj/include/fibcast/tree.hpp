#ifndef FIBCAST_TREE_HPP
#define FIBCAST_TREE_HPP

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fibcast/features.hpp"

namespace fibcast::tree {

// One node of a regression tree, stored in a flat array (root at index 0).
// feature == -1 marks a leaf. cover is the number of training rows routed
// through the node; the SHAP explainer requires it.
struct Node {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    std::int64_t cover = 0;

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<Node> nodes;
    const Node& root() const { return nodes.front(); }
};

enum class CombineMode { Average, Additive };

// Additive mode predicts base_score + learning_rate * sum of tree outputs;
// average mode predicts the mean tree output with base_score fixed at 0.
struct Ensemble {
    CombineMode mode = CombineMode::Average;
    double base_score = 0.0;
    double learning_rate = 1.0;
    int n_features = 0;
    std::vector<std::string> feature_names;
    std::vector<Tree> trees;
};

struct FitParams {
    int max_depth = 6;
    int min_samples_leaf = 1;
    int n_estimators = 550;
    double learning_rate = 0.05;
    double feature_subsample = 1.0; // per-split candidate fraction
    double row_subsample = 1.0;     // per-stage fraction (GBRT)
    bool bootstrap = false;         // per-tree resampling (RF)
    std::uint64_t seed = 0;

    void validate() const;
};

// Single CART fit: greedy variance-reduction splits with midpoint
// candidates; ignores the ensemble and subsampling fields of params.
Tree fit_cart(const data::FeatureMatrix& X, std::span<const double> y, const FitParams& params);

double predict_tree(const Tree& t, std::span<const double> x);

Ensemble fit_random_forest(const data::FeatureMatrix& X, std::span<const double> y,
                           FitParams params);

// Stagewise least-squares boosting on residuals. When stage_mse is given it
// receives the full-data training MSE after every stage.
Ensemble fit_gbrt(const data::FeatureMatrix& X, std::span<const double> y, FitParams params,
                  std::vector<double>* stage_mse = nullptr);

double predict_ensemble(const Ensemble& ens, std::span<const double> x);
std::vector<double> predict_batch(const Ensemble& ens, const data::FeatureMatrix& X);
std::vector<double> predict_batch_serial(const Ensemble& ens, const data::FeatureMatrix& X);

std::string to_json(const Ensemble& ens);
Ensemble from_json(const std::string& text);
void save_model(const Ensemble& ens, const std::filesystem::path& path);
Ensemble load_model(const std::filesystem::path& path);

// Exposed for tests: the split chosen for a row set on one feature set.
struct Split {
    bool valid = false;
    int feature = -1;
    double threshold = 0.0;
    double children_sse = 0.0;
};
Split best_split(const data::FeatureMatrix& X, std::span<const double> y,
                 std::span<const std::size_t> rows, std::span<const std::size_t> features,
                 int min_samples_leaf);
Split best_split_serial(const data::FeatureMatrix& X, std::span<const double> y,
                        std::span<const std::size_t> rows,
                        std::span<const std::size_t> features, int min_samples_leaf);

} // namespace fibcast::tree

#endif
