#ifndef FIBCAST_PIPELINE_HPP
#define FIBCAST_PIPELINE_HPP

#include <optional>
#include <string>

#include "fibcast/eval.hpp"
#include "fibcast/mlp.hpp"
#include "fibcast/preprocess.hpp"
#include "fibcast/svr.hpp"
#include "fibcast/tree.hpp"

namespace fibcast::pipeline {

// The model families exposed by the CLI. cb-like and xgb-like are the two
// boosting presets (they differ only in their default learning rate); rf,
// svr and mlp follow their modules' defaults.
enum class Family { CbLike, XgbLike, Rf, Svr, Mlp };

Family family_from_string(const std::string& s);
const char* to_string(Family f);
bool is_tree(Family f);

// Standardization applies to svr and mlp only; tree models take raw
// features.
bool needs_standardization(Family f);

struct ModelSpec {
    Family family = Family::CbLike;
    tree::FitParams tree;
    svr::Config svr;
    mlp::Config mlp;
    std::uint64_t seed = 0;

    // Named defaults: cb-like (depth 6, lr 0.05, 550 trees),
    // xgb-like (depth 6, lr 0.3, 550 trees), rf (550 bootstrapped trees,
    // per-split feature subset M/3), svr (RBF, eps 0.23, C 20), mlp
    // (two 100-neuron hidden layers).
    static ModelSpec preset(Family family, std::uint64_t seed);
    static ModelSpec preset(const std::string& family, std::uint64_t seed);
};

// A fitted model plus the standardizer it was trained with, if any.
// predict() accepts raw (unstandardized) feature matrices.
struct TrainedModel {
    Family family = Family::CbLike;
    std::optional<preprocess::Standardizer> scaler;
    std::optional<tree::Ensemble> ensemble;
    std::optional<svr::Model> svr_model;
    std::optional<mlp::Model> mlp_model;

    std::vector<double> predict(const data::FeatureMatrix& X) const;
    double predict_one(std::span<const double> x, const std::vector<std::string>& names) const;

    std::string to_json() const;
    static TrainedModel from_json(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static TrainedModel load(const std::filesystem::path& path);
};

TrainedModel fit(const ModelSpec& spec, const data::FeatureMatrix& X, std::span<const double> y);

// Adapter for the evaluation protocols.
eval::Pipeline make_pipeline(const ModelSpec& spec);

} // namespace fibcast::pipeline

#endif
