#include "fibcast/tree.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "fibcast/common.hpp"
#include "fibcast/leakage.hpp"
#include "fibcast/parallel.hpp"
#include "fibcast/rng.hpp"

namespace fibcast::tree {

using json = nlohmann::ordered_json;

void FitParams::validate() const {
    if (max_depth < 1) throw DomainError("max_depth must be >= 1");
    if (min_samples_leaf < 1) throw DomainError("min_samples_leaf must be >= 1");
    if (n_estimators < 0) throw DomainError("n_estimators must be >= 0");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
        throw DomainError("learning_rate must be in (0, 1]");
    }
    if (!(feature_subsample > 0.0 && feature_subsample <= 1.0)) {
        throw DomainError("feature_subsample must be in (0, 1]");
    }
    if (!(row_subsample > 0.0 && row_subsample <= 1.0)) {
        throw DomainError("row_subsample must be in (0, 1]");
    }
}

namespace {

// Gains that differ by no more than rounding noise count as equal, so the
// deterministic tie-break does not depend on summation order. Distinct
// partitions occasionally share the exact same SSE (e.g. when two features
// induce the same row split), and the prefix-sum and two-pass formulas
// round those last bits differently.
bool sse_improves(double cand, double best) {
    return cand < best - 1e-9 * (1.0 + std::min(std::abs(cand), std::abs(best)));
}

// Best (feature, midpoint) candidate for one feature over a row set.
// Returns children SSE = SSE(left) + SSE(right); lower is better.
Split scan_feature(const data::FeatureMatrix& X, std::span<const double> y,
                   std::span<const std::size_t> rows, int feature, int min_leaf,
                   std::vector<std::pair<double, double>>& buf) {
    Split best;
    const std::size_t n = rows.size();
    buf.clear();
    buf.reserve(n);
    for (const std::size_t r : rows) {
        buf.emplace_back(X.at(r, static_cast<std::size_t>(feature)), y[r]);
    }
    std::sort(buf.begin(), buf.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    double total_sum = 0.0, total_sq = 0.0;
    for (const auto& p : buf) {
        total_sum += p.second;
        total_sq += p.second * p.second;
    }

    double left_sum = 0.0, left_sq = 0.0;
    for (std::size_t i = 1; i < n; ++i) {
        left_sum += buf[i - 1].second;
        left_sq += buf[i - 1].second * buf[i - 1].second;
        if (buf[i].first <= buf[i - 1].first) continue; // no midpoint between equal values
        const std::size_t nl = i;
        const std::size_t nr = n - i;
        if (nl < static_cast<std::size_t>(min_leaf) || nr < static_cast<std::size_t>(min_leaf)) {
            continue;
        }
        const double right_sum = total_sum - left_sum;
        const double right_sq = total_sq - left_sq;
        const double sse = (left_sq - left_sum * left_sum / static_cast<double>(nl)) +
                           (right_sq - right_sum * right_sum / static_cast<double>(nr));
        // ascending scan: on a tie the earlier (lower) threshold is kept
        if (!best.valid || sse_improves(sse, best.children_sse)) {
            best.valid = true;
            best.feature = feature;
            best.threshold = 0.5 * (buf[i - 1].first + buf[i].first);
            best.children_sse = sse;
        }
    }
    return best;
}

// Keeps `cand` if it strictly improves on `best`; ties resolve to the
// lowest feature index, then the lowest threshold.
void merge_split(Split& best, const Split& cand) {
    if (!cand.valid) return;
    if (!best.valid || sse_improves(cand.children_sse, best.children_sse)) {
        best = cand;
        return;
    }
    if (!sse_improves(best.children_sse, cand.children_sse) &&
        (cand.feature < best.feature ||
         (cand.feature == best.feature && cand.threshold < best.threshold))) {
        best = cand;
    }
}

class TreeBuilder {
public:
    TreeBuilder(const data::FeatureMatrix& X, std::span<const double> y, const FitParams& p,
                rng::Rng* feature_rng)
        : X_(X), y_(y), params_(p), rng_(feature_rng) {}

    Tree build(std::vector<std::size_t> rows) {
        Tree t;
        t.nodes.reserve(2 * rows.size());
        build_node(t, std::move(rows), 1);
        return t;
    }

private:
    int build_node(Tree& t, std::vector<std::size_t>&& rows, int depth) {
        const int idx = static_cast<int>(t.nodes.size());
        t.nodes.emplace_back();
        t.nodes[idx].cover = static_cast<std::int64_t>(rows.size());

        double sum = 0.0;
        double ymin = rows.empty() ? 0.0 : y_[rows[0]];
        double ymax = ymin;
        for (const std::size_t r : rows) {
            sum += y_[r];
            ymin = std::min(ymin, y_[r]);
            ymax = std::max(ymax, y_[r]);
        }
        const double mean = sum / static_cast<double>(rows.size());

        const bool stop = depth > params_.max_depth ||
                          rows.size() < 2 * static_cast<std::size_t>(params_.min_samples_leaf) ||
                          ymin == ymax;
        Split split;
        if (!stop) {
            split = find_split(rows);
        }
        if (!split.valid) {
            t.nodes[idx].value = mean;
            return idx;
        }

        std::vector<std::size_t> left, right;
        left.reserve(rows.size());
        right.reserve(rows.size());
        for (const std::size_t r : rows) {
            if (X_.at(r, static_cast<std::size_t>(split.feature)) < split.threshold) {
                left.push_back(r);
            } else {
                right.push_back(r);
            }
        }
        rows.clear();
        rows.shrink_to_fit();

        t.nodes[idx].feature = split.feature;
        t.nodes[idx].threshold = split.threshold;
        const int l = build_node(t, std::move(left), depth + 1);
        const int r = build_node(t, std::move(right), depth + 1);
        t.nodes[idx].left = l;
        t.nodes[idx].right = r;
        return idx;
    }

    Split find_split(const std::vector<std::size_t>& rows) {
        const std::size_t m = X_.n_cols;
        std::vector<std::size_t> features;
        const std::size_t k =
            static_cast<std::size_t>(std::ceil(params_.feature_subsample * static_cast<double>(m)));
        if (rng_ != nullptr && k < m) {
            features = rng_->sample_without_replacement(m, k);
        } else {
            features.resize(m);
            std::iota(features.begin(), features.end(), std::size_t{0});
        }
        return best_split(X_, y_, rows, features, params_.min_samples_leaf);
    }

    const data::FeatureMatrix& X_;
    std::span<const double> y_;
    const FitParams& params_;
    rng::Rng* rng_;
};

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

void check_fit_inputs(const data::FeatureMatrix& X, std::span<const double> y) {
    leakage::check(X.row_ids, "tree fit");
    if (X.n_rows == 0) throw DomainError("tree fit: empty data");
    if (X.n_rows != y.size()) throw ShapeError("tree fit: |y| must equal rows(X)");
    for (const double v : X.values) {
        if (!std::isfinite(v)) throw DomainError("tree fit: non-finite feature value");
    }
    for (const double v : y) {
        if (!std::isfinite(v)) throw DomainError("tree fit: non-finite target");
    }
}

} // namespace

Split best_split_serial(const data::FeatureMatrix& X, std::span<const double> y,
                        std::span<const std::size_t> rows,
                        std::span<const std::size_t> features, int min_samples_leaf) {
    Split best;
    std::vector<std::pair<double, double>> buf;
    for (const std::size_t f : features) {
        merge_split(best, scan_feature(X, y, rows, static_cast<int>(f), min_samples_leaf, buf));
    }
    return best;
}

Split best_split(const data::FeatureMatrix& X, std::span<const double> y,
                 std::span<const std::size_t> rows, std::span<const std::size_t> features,
                 int min_samples_leaf) {
    if (!par::enabled() || features.size() < 2 || rows.size() < 256) {
        return best_split_serial(X, y, rows, features, min_samples_leaf);
    }
    // Candidates land in per-feature slots; the argmin reduction runs
    // serially in feature order so the result matches the serial path.
    std::vector<Split> results(features.size());
    const std::int64_t nf = static_cast<std::int64_t>(features.size());
#pragma omp parallel
    {
        std::vector<std::pair<double, double>> buf;
#pragma omp for schedule(static)
        for (std::int64_t i = 0; i < nf; ++i) {
            results[i] = scan_feature(X, y, rows, static_cast<int>(features[i]),
                                      min_samples_leaf, buf);
        }
    }
    Split best;
    for (const Split& s : results) merge_split(best, s);
    return best;
}

Tree fit_cart(const data::FeatureMatrix& X, std::span<const double> y, const FitParams& params) {
    params.validate();
    check_fit_inputs(X, y);
    TreeBuilder builder(X, y, params, nullptr);
    return builder.build(all_rows(X.n_rows));
}

double predict_tree(const Tree& t, std::span<const double> x) {
    int i = 0;
    while (!t.nodes[i].is_leaf()) {
        const Node& nd = t.nodes[i];
        const double v = x[static_cast<std::size_t>(nd.feature)];
        if (!std::isfinite(v)) throw DomainError("predict_tree: non-finite feature value");
        i = v < nd.threshold ? nd.left : nd.right;
    }
    return t.nodes[i].value;
}

Ensemble fit_random_forest(const data::FeatureMatrix& X, std::span<const double> y,
                           FitParams params) {
    params.validate();
    check_fit_inputs(X, y);
    if (params.n_estimators < 1) throw DomainError("random forest: n_estimators must be >= 1");

    Ensemble ens;
    ens.mode = CombineMode::Average;
    ens.base_score = 0.0;
    ens.learning_rate = 1.0;
    ens.n_features = static_cast<int>(X.n_cols);
    ens.feature_names = X.names;
    ens.trees.resize(static_cast<std::size_t>(params.n_estimators));

    const std::size_t n = X.n_rows;
    const std::int64_t n_trees = params.n_estimators;
    // Per-tree seeds are derived by counter, never by scheduling order, so
    // parallel and serial fits build identical forests.
#pragma omp parallel for schedule(dynamic) if (par::enabled())
    for (std::int64_t ti = 0; ti < n_trees; ++ti) {
        rng::Rng tree_rng(rng::derive_seed(params.seed, static_cast<std::uint64_t>(ti)));
        std::vector<std::size_t> rows;
        if (params.bootstrap) {
            rows.resize(n);
            for (std::size_t i = 0; i < n; ++i) rows[i] = tree_rng.index(n);
            std::sort(rows.begin(), rows.end());
        } else {
            rows = all_rows(n);
        }
        TreeBuilder builder(X, y, params, &tree_rng);
        ens.trees[static_cast<std::size_t>(ti)] = builder.build(std::move(rows));
    }
    return ens;
}

Ensemble fit_gbrt(const data::FeatureMatrix& X, std::span<const double> y, FitParams params,
                  std::vector<double>* stage_mse) {
    params.validate();
    check_fit_inputs(X, y);

    Ensemble ens;
    ens.mode = CombineMode::Additive;
    ens.learning_rate = params.learning_rate;
    ens.n_features = static_cast<int>(X.n_cols);
    ens.feature_names = X.names;

    const std::size_t n = X.n_rows;
    double base = 0.0;
    for (const double v : y) base += v;
    base /= static_cast<double>(n);
    ens.base_score = base;

    std::vector<double> residual(n);
    for (std::size_t i = 0; i < n; ++i) residual[i] = y[i] - base;
    if (stage_mse) {
        stage_mse->clear();
        stage_mse->reserve(static_cast<std::size_t>(params.n_estimators));
    }

    for (int m = 0; m < params.n_estimators; ++m) {
        std::vector<std::size_t> rows;
        rng::Rng stage_rng(rng::derive_seed(params.seed, static_cast<std::uint64_t>(m)));
        if (params.row_subsample < 1.0) {
            const std::size_t k = std::max<std::size_t>(
                1, static_cast<std::size_t>(std::llround(params.row_subsample *
                                                         static_cast<double>(n))));
            rows = stage_rng.sample_without_replacement(n, k);
        } else {
            rows = all_rows(n);
        }
        TreeBuilder builder(X, std::span<const double>(residual), params,
                            params.feature_subsample < 1.0 ? &stage_rng : nullptr);
        Tree t = builder.build(std::move(rows));

        double sse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            residual[i] -= params.learning_rate * predict_tree(t, X.row(i));
            sse += residual[i] * residual[i];
        }
        if (stage_mse) stage_mse->push_back(sse / static_cast<double>(n));
        ens.trees.push_back(std::move(t));
    }
    return ens;
}

double predict_ensemble(const Ensemble& ens, std::span<const double> x) {
    if (ens.n_features > 0 && x.size() != static_cast<std::size_t>(ens.n_features)) {
        throw ShapeError("predict_ensemble: feature count mismatch");
    }
    if (ens.mode == CombineMode::Additive) {
        double acc = ens.base_score;
        for (const Tree& t : ens.trees) acc += ens.learning_rate * predict_tree(t, x);
        return acc;
    }
    if (ens.trees.empty()) return 0.0;
    double acc = 0.0;
    for (const Tree& t : ens.trees) acc += predict_tree(t, x);
    return acc / static_cast<double>(ens.trees.size());
}

std::vector<double> predict_batch_serial(const Ensemble& ens, const data::FeatureMatrix& X) {
    std::vector<double> out(X.n_rows);
    for (std::size_t r = 0; r < X.n_rows; ++r) out[r] = predict_ensemble(ens, X.row(r));
    return out;
}

std::vector<double> predict_batch(const Ensemble& ens, const data::FeatureMatrix& X) {
    if (!par::enabled() || X.n_rows < 64) return predict_batch_serial(ens, X);
    std::vector<double> out(X.n_rows);
    const std::int64_t n = static_cast<std::int64_t>(X.n_rows);
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
        out[static_cast<std::size_t>(r)] = predict_ensemble(ens, X.row(static_cast<std::size_t>(r)));
    }
    return out;
}

namespace {

json tree_to_json(const Tree& t) {
    json doc;
    json feature = json::array(), threshold = json::array(), left = json::array(),
         right = json::array(), value = json::array(), cover = json::array();
    for (const Node& nd : t.nodes) {
        feature.push_back(nd.feature);
        threshold.push_back(nd.threshold);
        left.push_back(nd.left);
        right.push_back(nd.right);
        value.push_back(nd.value);
        cover.push_back(nd.cover);
    }
    doc["feature"] = std::move(feature);
    doc["threshold"] = std::move(threshold);
    doc["left"] = std::move(left);
    doc["right"] = std::move(right);
    doc["value"] = std::move(value);
    doc["cover"] = std::move(cover);
    return doc;
}

Tree tree_from_json(const json& doc) {
    Tree t;
    const auto& feature = doc.at("feature");
    const auto& threshold = doc.at("threshold");
    const auto& left = doc.at("left");
    const auto& right = doc.at("right");
    const auto& value = doc.at("value");
    const auto& cover = doc.at("cover");
    const std::size_t n = feature.size();
    if (threshold.size() != n || left.size() != n || right.size() != n || value.size() != n ||
        cover.size() != n || n == 0) {
        throw ModelFormatError("tree ensemble: inconsistent node arrays");
    }
    t.nodes.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        Node& nd = t.nodes[i];
        nd.feature = feature[i].get<int>();
        nd.threshold = threshold[i].get<double>();
        nd.left = left[i].get<int>();
        nd.right = right[i].get<int>();
        nd.value = value[i].get<double>();
        nd.cover = cover[i].get<std::int64_t>();
        if (nd.cover <= 0) throw ModelFormatError("tree ensemble: missing or non-positive cover");
        if (!nd.is_leaf()) {
            if (nd.left < 0 || nd.right < 0 || static_cast<std::size_t>(nd.left) >= n ||
                static_cast<std::size_t>(nd.right) >= n) {
                throw ModelFormatError("tree ensemble: child index out of range");
            }
        }
    }
    // Cover conservation is a structural invariant of every stored model.
    for (const Node& nd : t.nodes) {
        if (!nd.is_leaf() &&
            nd.cover != t.nodes[nd.left].cover + t.nodes[nd.right].cover) {
            throw ModelFormatError("tree ensemble: cover conservation violated");
        }
    }
    return t;
}

} // namespace

std::string to_json(const Ensemble& ens) {
    json doc;
    doc["format"] = "fibcast-tree-ensemble";
    doc["version"] = 1;
    doc["combine_mode"] = ens.mode == CombineMode::Additive ? "additive" : "average";
    doc["base_score"] = ens.base_score;
    doc["learning_rate"] = ens.learning_rate;
    doc["n_features"] = ens.n_features;
    doc["feature_names"] = ens.feature_names;
    doc["trees"] = json::array();
    for (const Tree& t : ens.trees) doc["trees"].push_back(tree_to_json(t));
    return doc.dump() + "\n";
}

Ensemble from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ModelFormatError(std::string("tree ensemble: corrupt file: ") + e.what());
    }
    if (doc.value("format", "") != "fibcast-tree-ensemble") {
        throw ModelFormatError("tree ensemble: missing format tag");
    }
    if (doc.value("version", 0) != 1) {
        throw ModelFormatError("tree ensemble: unsupported version " +
                               std::to_string(doc.value("version", 0)));
    }
    Ensemble ens;
    const std::string mode = doc.at("combine_mode").get<std::string>();
    if (mode == "additive") {
        ens.mode = CombineMode::Additive;
    } else if (mode == "average") {
        ens.mode = CombineMode::Average;
    } else {
        throw ModelFormatError("tree ensemble: unknown combine_mode '" + mode + "'");
    }
    ens.base_score = doc.at("base_score").get<double>();
    ens.learning_rate = doc.at("learning_rate").get<double>();
    ens.n_features = doc.at("n_features").get<int>();
    if (doc.contains("feature_names")) {
        ens.feature_names = doc.at("feature_names").get<std::vector<std::string>>();
    }
    if (ens.mode == CombineMode::Average && ens.base_score != 0.0) {
        throw ModelFormatError("tree ensemble: average mode requires base_score 0");
    }
    for (const auto& t : doc.at("trees")) ens.trees.push_back(tree_from_json(t));
    return ens;
}

void save_model(const Ensemble& ens, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << to_json(ens);
    if (!out) throw DataError("write failed for '" + path.string() + "'");
}

Ensemble load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

} // namespace fibcast::tree
