#include "fibcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fibcast/common.hpp"

namespace fibcast::eval {
namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, const char* who) {
    if (a.size() != b.size() || a.empty()) {
        throw ShapeError(std::string(who) + ": vectors must have equal non-zero length");
    }
}

double mean_of(std::span<const double> v) {
    double acc = 0.0;
    for (const double x : v) acc += x;
    return acc / static_cast<double>(v.size());
}

} // namespace

double r_squared(std::span<const double> y_true, std::span<const double> y_pred) {
    check_lengths(y_true, y_pred, "r_squared");
    const double mean = mean_of(y_true);
    double sse = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        sse += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
        sst += (y_true[i] - mean) * (y_true[i] - mean);
    }
    if (sst <= 0.0) {
        throw DomainError("r_squared: y_true is constant");
    }
    return 1.0 - sse / sst;
}

double rmse(std::span<const double> y_true, std::span<const double> y_pred) {
    check_lengths(y_true, y_pred, "rmse");
    double sse = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        sse += (y_true[i] - y_pred[i]) * (y_true[i] - y_pred[i]);
    }
    return std::sqrt(sse / static_cast<double>(y_true.size()));
}

std::vector<double> average_ranks(std::span<const double> v) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        // tied block occupies ranks i+1 .. j+1; all get the average
        const double avg = 0.5 * static_cast<double>(i + 1 + j + 1);
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
        i = j + 1;
    }
    return ranks;
}

double spearman_rho(std::span<const double> a, std::span<const double> b) {
    check_lengths(a, b, "spearman_rho");
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double ma = mean_of(ra);
    const double mb = mean_of(rb);
    double cov = 0.0, va = 0.0, vb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        cov += (ra[i] - ma) * (rb[i] - mb);
        va += (ra[i] - ma) * (ra[i] - ma);
        vb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (va <= 0.0 || vb <= 0.0) {
        throw DomainError("spearman_rho: constant input vector");
    }
    return cov / std::sqrt(va * vb);
}

} // namespace fibcast::eval
