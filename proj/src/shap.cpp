#include "fibcast/shap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "fibcast/common.hpp"
#include "fibcast/parallel.hpp"

namespace fibcast::shap {
namespace {

using tree::Ensemble;
using tree::Node;
using tree::Tree;

void validate_covers(const Tree& t) {
    for (const Node& nd : t.nodes) {
        if (nd.cover <= 0) {
            throw ModelFormatError("shap: tree node without a positive cover value");
        }
        if (!nd.is_leaf() &&
            nd.cover != t.nodes[nd.left].cover + t.nodes[nd.right].cover) {
            throw ModelFormatError("shap: cover conservation violated at an internal node");
        }
    }
}

double cond_exp_node(const Tree& t, int idx, std::span<const double> x,
                     const std::vector<bool>& present) {
    const Node& nd = t.nodes[idx];
    if (nd.is_leaf()) return nd.value;
    const std::size_t f = static_cast<std::size_t>(nd.feature);
    if (f < present.size() && present[f]) {
        return cond_exp_node(t, x[f] < nd.threshold ? nd.left : nd.right, x, present);
    }
    const double wl = static_cast<double>(t.nodes[nd.left].cover) / static_cast<double>(nd.cover);
    const double wr = static_cast<double>(t.nodes[nd.right].cover) / static_cast<double>(nd.cover);
    return wl * cond_exp_node(t, nd.left, x, present) + wr * cond_exp_node(t, nd.right, x, present);
}

// Expected tree output over the cover distribution (no features present).
double tree_mean(const Tree& t) {
    double acc = 0.0;
    for (const Node& nd : t.nodes) {
        if (nd.is_leaf()) acc += nd.value * static_cast<double>(nd.cover);
    }
    return acc / static_cast<double>(t.root().cover);
}

double ensemble_scale(const Ensemble& ens) {
    if (ens.mode == tree::CombineMode::Additive) return ens.learning_rate;
    return ens.trees.empty() ? 0.0 : 1.0 / static_cast<double>(ens.trees.size());
}

// --------------------------------------------------------------------
// Path algorithm. The path holds one element per unique feature split on
// so far (element 0 is a sentinel); pweight[j] carries the total
// permutation weight of the subsets of size j of those features.
// --------------------------------------------------------------------

struct PathElement {
    int feature = -1;
    double zero_fraction = 1.0; // flow-through proportion when the feature is absent
    double one_fraction = 1.0;  // 1 when x follows this branch, else 0
    double pweight = 0.0;
};

using Path = std::vector<PathElement>;

// Adds a feature with fractions (z, o); path grows by one element.
void extend_path(Path& path, double z, double o, int feature) {
    path.push_back({feature, z, o, path.empty() ? 1.0 : 0.0});
    const int depth = static_cast<int>(path.size()) - 1;
    for (int i = depth - 1; i >= 0; --i) {
        path[i + 1].pweight +=
            o * path[i].pweight * static_cast<double>(i + 1) / static_cast<double>(depth + 1);
        path[i].pweight =
            z * path[i].pweight * static_cast<double>(depth - i) / static_cast<double>(depth + 1);
    }
}

// Exact inverse of extend_path for the element at `index`; extensions
// commute, so any element can be removed. Path shrinks by one element.
void unwind_path(Path& path, int index) {
    const int depth = static_cast<int>(path.size()) - 1;
    const double o = path[index].one_fraction;
    const double z = path[index].zero_fraction;
    double next_one = path[depth].pweight;

    for (int i = depth - 1; i >= 0; --i) {
        if (o != 0.0) {
            const double tmp = path[i].pweight;
            path[i].pweight =
                next_one * static_cast<double>(depth + 1) / (static_cast<double>(i + 1) * o);
            next_one = tmp - path[i].pweight * z * static_cast<double>(depth - i) /
                                 static_cast<double>(depth + 1);
        } else {
            path[i].pweight = path[i].pweight * static_cast<double>(depth + 1) /
                              (z * static_cast<double>(depth - i));
        }
    }
    for (int i = index; i < depth; ++i) {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
    path.pop_back();
}

// Sum of pweights after removing element `index` (path left untouched).
double unwound_sum(const Path& path, int index) {
    Path scratch = path;
    unwind_path(scratch, index);
    double total = 0.0;
    for (const PathElement& e : scratch) total += e.pweight;
    return total;
}

void shap_recurse(const Tree& t, std::span<const double> x, int node_idx, Path path, double p_z,
                  double p_o, int p_feature, double scale, std::vector<double>& phi) {
    extend_path(path, p_z, p_o, p_feature);
    const Node& nd = t.nodes[node_idx];

    if (nd.is_leaf()) {
        const int depth = static_cast<int>(path.size()) - 1;
        for (int i = 1; i <= depth; ++i) {
            const double w = unwound_sum(path, i);
            phi[static_cast<std::size_t>(path[i].feature)] +=
                w * (path[i].one_fraction - path[i].zero_fraction) * nd.value * scale;
        }
        return;
    }

    const std::size_t f = static_cast<std::size_t>(nd.feature);
    if (!std::isfinite(x[f])) throw DomainError("tree_shap: non-finite feature value");
    const int hot = x[f] < nd.threshold ? nd.left : nd.right;
    const int cold = hot == nd.left ? nd.right : nd.left;

    // A repeated split on the same feature folds into the existing path
    // element: its fractions multiply along the path.
    double in_z = 1.0, in_o = 1.0;
    const int depth = static_cast<int>(path.size()) - 1;
    for (int i = 1; i <= depth; ++i) {
        if (path[i].feature == nd.feature) {
            in_z = path[i].zero_fraction;
            in_o = path[i].one_fraction;
            unwind_path(path, i);
            break;
        }
    }

    const double cover = static_cast<double>(nd.cover);
    shap_recurse(t, x, hot, path, in_z * static_cast<double>(t.nodes[hot].cover) / cover, in_o,
                 nd.feature, scale, phi);
    shap_recurse(t, x, cold, std::move(path),
                 in_z * static_cast<double>(t.nodes[cold].cover) / cover, 0.0, nd.feature, scale,
                 phi);
}

void check_features(const Ensemble& ens, std::span<const double> x) {
    if (ens.n_features > 0 && x.size() != static_cast<std::size_t>(ens.n_features)) {
        throw ShapeError("shap: feature count does not match the model");
    }
}

} // namespace

double tree_conditional_expectation(const Tree& t, std::span<const double> x,
                                    const std::vector<bool>& present) {
    validate_covers(t);
    return cond_exp_node(t, 0, x, present);
}

Attribution brute_force_shap(const Ensemble& ens, std::span<const double> x) {
    check_features(ens, x);
    const std::size_t m = x.size();
    if (m > 15) {
        throw DomainError("brute_force_shap: more than 15 features (2^M enumeration)");
    }
    for (const Tree& t : ens.trees) validate_covers(t);

    const std::size_t n_masks = std::size_t{1} << m;
    const double scale = ensemble_scale(ens);
    const double offset = ens.mode == tree::CombineMode::Additive ? ens.base_score : 0.0;

    std::vector<double> v(n_masks, 0.0);
    std::vector<bool> present(m);
    for (std::size_t mask = 0; mask < n_masks; ++mask) {
        for (std::size_t i = 0; i < m; ++i) present[i] = (mask >> i) & 1U;
        double acc = 0.0;
        for (const Tree& t : ens.trees) acc += cond_exp_node(t, 0, x, present);
        v[mask] = offset + scale * acc;
    }

    // w[s] = s! (m - s - 1)! / m!
    std::vector<double> fact(m + 1, 1.0);
    for (std::size_t i = 1; i <= m; ++i) fact[i] = fact[i - 1] * static_cast<double>(i);
    std::vector<double> w(m, 0.0);
    for (std::size_t s = 0; s < m; ++s) w[s] = fact[s] * fact[m - s - 1] / fact[m];

    Attribution a;
    a.phi.assign(m, 0.0);
    a.base = v[0];
    a.prediction = v[n_masks - 1];
    for (std::size_t i = 0; i < m; ++i) {
        const std::size_t bit = std::size_t{1} << i;
        for (std::size_t mask = 0; mask < n_masks; ++mask) {
            if (mask & bit) continue;
            const auto s = static_cast<std::size_t>(std::popcount(mask));
            a.phi[i] += w[s] * (v[mask | bit] - v[mask]);
        }
    }
    return a;
}

Attribution tree_shap(const Ensemble& ens, std::span<const double> x) {
    check_features(ens, x);
    for (const Tree& t : ens.trees) validate_covers(t);

    Attribution a;
    a.phi.assign(x.size(), 0.0);
    const double scale = ensemble_scale(ens);
    a.base = ens.mode == tree::CombineMode::Additive ? ens.base_score : 0.0;
    for (const Tree& t : ens.trees) {
        a.base += scale * tree_mean(t);
        Path path;
        path.reserve(16);
        shap_recurse(t, x, 0, std::move(path), 1.0, 1.0, -1, scale, a.phi);
    }
    a.prediction = predict_ensemble(ens, x);
    return a;
}

std::vector<Attribution> tree_shap_batch_serial(const Ensemble& ens,
                                                const data::FeatureMatrix& X) {
    std::vector<Attribution> out(X.n_rows);
    for (std::size_t r = 0; r < X.n_rows; ++r) out[r] = tree_shap(ens, X.row(r));
    return out;
}

std::vector<Attribution> tree_shap_batch(const Ensemble& ens, const data::FeatureMatrix& X) {
    if (!par::enabled() || X.n_rows < 8) return tree_shap_batch_serial(ens, X);
    std::vector<Attribution> out(X.n_rows);
    const std::int64_t n = static_cast<std::int64_t>(X.n_rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
        out[static_cast<std::size_t>(r)] = tree_shap(ens, X.row(static_cast<std::size_t>(r)));
    }
    return out;
}

ImportanceRanking mean_abs_shap(std::span<const Attribution> attributions,
                                const std::vector<std::string>& feature_names) {
    ImportanceRanking ranking;
    std::vector<double> acc(feature_names.size(), 0.0);
    for (const Attribution& a : attributions) {
        if (a.phi.size() != feature_names.size()) {
            throw ShapeError("mean_abs_shap: attribution width mismatch");
        }
        for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += std::abs(a.phi[i]);
    }
    const double n = attributions.empty() ? 1.0 : static_cast<double>(attributions.size());
    ranking.entries.reserve(feature_names.size());
    for (std::size_t i = 0; i < feature_names.size(); ++i) {
        ranking.entries.emplace_back(feature_names[i], acc[i] / n);
    }
    std::sort(ranking.entries.begin(), ranking.entries.end(), [](const auto& a, const auto& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });
    return ranking;
}

DependenceTable dependence_export(const std::string& feature, const std::string& color_feature,
                                  const data::FeatureMatrix& X,
                                  std::span<const Attribution> attributions) {
    if (attributions.size() != X.n_rows) {
        throw ShapeError("dependence_export: one attribution per matrix row required");
    }
    const std::size_t fi = X.col_index(feature);
    const std::size_t ci = X.col_index(color_feature);
    DependenceTable t;
    t.feature = feature;
    t.color_feature = color_feature;
    t.rows.reserve(X.n_rows);
    for (std::size_t r = 0; r < X.n_rows; ++r) {
        t.rows.push_back({X.at(r, fi), attributions[r].phi[fi], X.at(r, ci)});
    }
    return t;
}

} // namespace fibcast::shap
