#ifndef FIBCAST_SVR_HPP
#define FIBCAST_SVR_HPP

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fibcast/features.hpp"

namespace fibcast::svr {

struct Config {
    double epsilon = 0.23; // tube half-width
    double c = 20.0;       // penalty
    double gamma = 0.0;    // RBF width; 0 selects 1 / (M * pooled feature variance)
    double tol = 1e-3;     // KKT tolerance
    int max_passes = 200000; // pairwise update budget

    void validate() const;
};

// Dual model: only rows with non-zero coefficient are kept.
struct Model {
    std::vector<std::vector<double>> support; // standardized feature rows
    std::vector<double> beta;                 // alpha_i - alpha_i^*
    double bias = 0.0;
    double gamma = 0.0;

    std::string to_json() const;
    static Model from_json(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static Model load(const std::filesystem::path& path);
};

double rbf_kernel(std::span<const double> x, std::span<const double> z, double gamma);

// Full n x n kernel matrix (row-major). Entries are independent, so the
// parallel path is bit-identical to the serial one.
std::vector<double> rbf_kernel_matrix(const data::FeatureMatrix& X, double gamma);
std::vector<double> rbf_kernel_matrix_serial(const data::FeatureMatrix& X, double gamma);

// The "scale" convention when Config::gamma is 0.
double resolve_gamma(const data::FeatureMatrix& X, double gamma);

// -0.5 b'Kb + y'b - eps * sum|b|; the quantity the dual solver maximizes.
double dual_objective(const std::vector<double>& K, std::span<const double> y, double epsilon,
                      std::span<const double> beta);

struct FitReport {
    int pair_updates = 0;
    double kkt_violation = 0.0;
    double dual = 0.0;
};

// Pairwise coordinate ascent on the dual with worst-violator selection.
// Requires a standardized matrix; throws ConvergenceError (carrying the
// final KKT violation) if the budget runs out.
Model fit_svr(const data::FeatureMatrix& X, std::span<const double> y, const Config& cfg,
              FitReport* report = nullptr);

double predict_svr(const Model& m, std::span<const double> x);
std::vector<double> predict_batch(const Model& m, const data::FeatureMatrix& X);
std::vector<double> predict_batch_serial(const Model& m, const data::FeatureMatrix& X);

} // namespace fibcast::svr

#endif
