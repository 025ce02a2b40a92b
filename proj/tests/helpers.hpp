#ifndef FIBCAST_TESTS_HELPERS_HPP
#define FIBCAST_TESTS_HELPERS_HPP

#include <cmath>
#include <cstdint>
#include <vector>

#include "fibcast/features.hpp"
#include "fibcast/rng.hpp"
#include "fibcast/series.hpp"
#include "fibcast/time.hpp"
#include "fibcast/tree.hpp"

// Absolute-tolerance check; doctest's Approx is relative-only.
#define CHECK_NEAR(a, b, tol) CHECK(std::abs((a) - (b)) <= (tol))
#define REQUIRE_NEAR(a, b, tol) REQUIRE(std::abs((a) - (b)) <= (tol))

namespace testutil {

inline fibcast::timeutil::Minutes ts(int y, int mo, int d, int h, int mi) {
    return fibcast::timeutil::from_civil({y, mo, d, h, mi});
}

// Hourly series starting at `start` with the given values.
inline fibcast::data::HourlySeries hourly(const std::string& name,
                                          fibcast::timeutil::Minutes start,
                                          const std::vector<double>& values) {
    std::vector<fibcast::timeutil::Minutes> t(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        t[i] = start + static_cast<fibcast::timeutil::Minutes>(i) * fibcast::timeutil::kHour;
    }
    return fibcast::data::HourlySeries(name, t, values);
}

inline fibcast::data::FeatureMatrix matrix(const std::vector<std::string>& names,
                                           const std::vector<std::vector<double>>& rows) {
    fibcast::data::FeatureMatrix m;
    m.names = names;
    m.n_rows = rows.size();
    m.n_cols = names.size();
    m.values.reserve(m.n_rows * m.n_cols);
    for (const auto& r : rows) {
        for (const double v : r) m.values.push_back(v);
    }
    m.row_ids.resize(m.n_rows);
    for (std::size_t i = 0; i < m.n_rows; ++i) m.row_ids[i] = i;
    return m;
}

inline fibcast::data::FeatureMatrix random_matrix(fibcast::rng::Rng& rng, std::size_t n_rows,
                                                  std::size_t n_cols, double lo = -1.0,
                                                  double hi = 1.0) {
    std::vector<std::string> names;
    for (std::size_t c = 0; c < n_cols; ++c) names.push_back("f" + std::to_string(c));
    fibcast::data::FeatureMatrix m;
    m.names = names;
    m.n_rows = n_rows;
    m.n_cols = n_cols;
    m.values.resize(n_rows * n_cols);
    for (auto& v : m.values) v = rng.uniform(lo, hi);
    m.row_ids.resize(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) m.row_ids[i] = i;
    return m;
}

// Random tree with conserved covers and random thresholds; features may
// repeat along a path.
inline int random_subtree(fibcast::tree::Tree& t, fibcast::rng::Rng& rng, int depth,
                          int max_depth, int n_features, std::int64_t cover) {
    const int idx = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    t.nodes[idx].cover = cover;
    const bool leaf = depth >= max_depth || cover < 2 || rng.uniform01() < 0.25;
    if (leaf) {
        t.nodes[idx].value = rng.uniform(-1.0, 1.0);
        return idx;
    }
    const std::int64_t left_cover =
        1 + static_cast<std::int64_t>(rng.index(static_cast<std::size_t>(cover - 1)));
    t.nodes[idx].feature = static_cast<int>(rng.index(static_cast<std::size_t>(n_features)));
    t.nodes[idx].threshold = rng.uniform(-1.0, 1.0);
    const int l = random_subtree(t, rng, depth + 1, max_depth, n_features, left_cover);
    const int r = random_subtree(t, rng, depth + 1, max_depth, n_features, cover - left_cover);
    t.nodes[idx].left = l;
    t.nodes[idx].right = r;
    return idx;
}

inline fibcast::tree::Tree random_tree(fibcast::rng::Rng& rng, int max_depth, int n_features,
                                       std::int64_t root_cover) {
    fibcast::tree::Tree t;
    random_subtree(t, rng, 0, max_depth, n_features, root_cover);
    return t;
}

} // namespace testutil

#endif
