#ifndef FIBCAST_SHAP_HPP
#define FIBCAST_SHAP_HPP

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fibcast/features.hpp"
#include "fibcast/tree.hpp"

namespace fibcast::shap {

// Per-feature attribution of one prediction. base is the expected model
// output over the training distribution (cover-weighted); local accuracy
// means base + sum(phi) equals the prediction.
struct Attribution {
    std::vector<double> phi;
    double base = 0.0;
    double prediction = 0.0;
};

// Tree-path-dependent conditional expectation: descend normally on features
// in `present`; at splits on absent features take the cover-weighted
// average of both branches.
double tree_conditional_expectation(const tree::Tree& t, std::span<const double> x,
                                    const std::vector<bool>& present);

// Exact Shapley values by subset enumeration (2^M conditional expectations).
// The independent oracle for tree_shap; refuses more than 15 features.
Attribution brute_force_shap(const tree::Ensemble& ens, std::span<const double> x);

// Polynomial-time path algorithm over the same conditional expectation.
Attribution tree_shap(const tree::Ensemble& ens, std::span<const double> x);

std::vector<Attribution> tree_shap_batch(const tree::Ensemble& ens,
                                         const data::FeatureMatrix& X);
std::vector<Attribution> tree_shap_batch_serial(const tree::Ensemble& ens,
                                                const data::FeatureMatrix& X);

// (feature name, mean |phi|) sorted by descending importance, ties broken
// by feature name.
struct ImportanceRanking {
    std::vector<std::pair<std::string, double>> entries;
};

ImportanceRanking mean_abs_shap(std::span<const Attribution> attributions,
                                const std::vector<std::string>& feature_names);

// Rows (feature value, phi of feature, color-feature value), input order.
struct DependenceTable {
    std::string feature;
    std::string color_feature;
    std::vector<std::array<double, 3>> rows;
};

DependenceTable dependence_export(const std::string& feature, const std::string& color_feature,
                                  const data::FeatureMatrix& X,
                                  std::span<const Attribution> attributions);

} // namespace fibcast::shap

#endif
