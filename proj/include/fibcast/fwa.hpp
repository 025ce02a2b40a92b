#ifndef FIBCAST_FWA_HPP
#define FIBCAST_FWA_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "fibcast/features.hpp"
#include "fibcast/pipeline.hpp"

namespace fibcast::fwa {

struct SearchSpace {
    struct Dim {
        std::string name;
        double lo = 0.0;
        double hi = 1.0;
        bool integer = false;
    };
    std::vector<Dim> dims;

    void validate() const;
};

struct Config {
    int n_fireworks = 5;
    int total_sparks = 50;       // m: explosion sparks per generation
    double amplitude_frac = 0.4; // max amplitude as a fraction of each range
    int n_gaussian = 5;          // Gaussian mutation sparks per generation
    int spark_min = 2;
    int spark_max = 40;
    int eval_budget = 1000;
    std::uint64_t seed = 0;
    // Optional warm starts; they replace the first random fireworks.
    std::vector<std::vector<double>> init_points;

    void validate() const;
};

struct HistoryEntry {
    int eval_index = 0;
    std::vector<double> point;
    double value = 0.0;
    double best_so_far = 0.0;
};

struct Result {
    std::vector<double> best_point;
    double best_value = 0.0;
    int evaluations = 0;
    std::vector<HistoryEntry> history;
};

using Objective = std::function<double(std::span<const double>)>;

// Fireworks Algorithm minimizer: explosion sparks with fitness-scaled
// counts and amplitudes, Gaussian mutation sparks, modular mapping of
// out-of-bounds coordinates and distance-based roulette selection with the
// incumbent best always retained. Deterministic given the seed; never
// exceeds eval_budget objective calls. Integer-flagged dimensions are
// rounded before every evaluation.
Result fwa_minimize(const Objective& objective, const SearchSpace& space, const Config& cfg);

void write_history_csv(const std::filesystem::path& path, const Result& r,
                       const SearchSpace& space);

struct TuneResult {
    std::vector<std::string> names;
    std::vector<double> best_point;
    double cv_rmse = 0.0;
    Result search;
};

// Tunes svr (epsilon, c, optionally gamma) or mlp (layers, neurons)
// hyperparameters. The objective is mean RMSE over an internal shuffled
// 5-fold cross-validation with a seed derived from cfg.seed; the family's
// published defaults are injected as a warm-start firework.
TuneResult tune_model(pipeline::Family family, const data::FeatureMatrix& X,
                      std::span<const double> y, const SearchSpace& space, const Config& cfg);

} // namespace fibcast::fwa

#endif
