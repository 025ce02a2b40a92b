#ifndef FIBCAST_METRICS_HPP
#define FIBCAST_METRICS_HPP

#include <span>
#include <vector>

namespace fibcast::eval {

// 1 - SSE/SST with SST about the mean of y_true. May be negative.
// Constant y_true is a domain error.
double r_squared(std::span<const double> y_true, std::span<const double> y_pred);

double rmse(std::span<const double> y_true, std::span<const double> y_pred);

// Average ranks: ties receive the mean of their rank span (1-based).
std::vector<double> average_ranks(std::span<const double> v);

// Pearson correlation of average ranks. Constant input is a domain error.
double spearman_rho(std::span<const double> a, std::span<const double> b);

} // namespace fibcast::eval

#endif
