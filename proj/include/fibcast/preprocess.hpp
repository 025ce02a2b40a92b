#ifndef FIBCAST_PREPROCESS_HPP
#define FIBCAST_PREPROCESS_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "fibcast/features.hpp"

namespace fibcast::preprocess {

// log10(count + 1). The +1 offset keeps zero counts representable (zero
// measurements occur in routine monitoring data).
double log10p(double count);

// Inverse transform: max(0, 10^y - 1).
double inv_log10p(double y);

std::vector<double> log10p_all(const std::vector<double>& counts);

// Per-column mean and population standard deviation. Fitted on training
// data only; apply-time divisor is guarded so constant columns map to 0.
struct Standardizer {
    std::vector<std::string> names;
    std::vector<double> mean;
    std::vector<double> stdev;

    std::string to_json() const;
    static Standardizer from_json(const std::string& text);
    void save(const std::filesystem::path& path) const;
    static Standardizer load(const std::filesystem::path& path);
};

Standardizer fit_standardizer(const data::FeatureMatrix& X);

// (x - mean) / max(stdev, 1e-12) per column. Refuses to run twice on the
// same matrix and checks the column layout.
data::FeatureMatrix apply_standardizer(const Standardizer& s, const data::FeatureMatrix& X);

} // namespace fibcast::preprocess

#endif
