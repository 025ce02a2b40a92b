#include "fibcast/preprocess.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fibcast/common.hpp"
#include "fibcast/leakage.hpp"

namespace fibcast::preprocess {

using json = nlohmann::ordered_json;

namespace {
constexpr double kStdevGuard = 1e-12;
}

double log10p(double count) {
    if (!(count >= 0.0)) {
        throw DomainError("log10p: count must be >= 0");
    }
    return std::log10(count + 1.0);
}

double inv_log10p(double y) {
    const double v = std::pow(10.0, y) - 1.0;
    return v > 0.0 ? v : 0.0;
}

std::vector<double> log10p_all(const std::vector<double>& counts) {
    std::vector<double> out;
    out.reserve(counts.size());
    for (const double c : counts) out.push_back(log10p(c));
    return out;
}

Standardizer fit_standardizer(const data::FeatureMatrix& X) {
    leakage::check(X.row_ids, "fit_standardizer");
    if (X.n_rows < 2) {
        throw DomainError("fit_standardizer: need at least 2 rows");
    }
    Standardizer s;
    s.names = X.names;
    s.mean.resize(X.n_cols);
    s.stdev.resize(X.n_cols);
    const double n = static_cast<double>(X.n_rows);
    for (std::size_t c = 0; c < X.n_cols; ++c) {
        double sum = 0.0;
        for (std::size_t r = 0; r < X.n_rows; ++r) sum += X.at(r, c);
        const double mean = sum / n;
        double ssd = 0.0;
        for (std::size_t r = 0; r < X.n_rows; ++r) {
            const double d = X.at(r, c) - mean;
            ssd += d * d;
        }
        s.mean[c] = mean;
        s.stdev[c] = std::sqrt(ssd / n); // population convention
    }
    return s;
}

data::FeatureMatrix apply_standardizer(const Standardizer& s, const data::FeatureMatrix& X) {
    if (X.standardized) {
        throw PipelineError("apply_standardizer: matrix is already standardized");
    }
    if (s.mean.size() != X.n_cols || s.names != X.names) {
        throw ShapeError("apply_standardizer: column layout does not match the fitted scaler");
    }
    data::FeatureMatrix out = X;
    out.standardized = true;
    for (std::size_t c = 0; c < X.n_cols; ++c) {
        const double mean = s.mean[c];
        const double denom = s.stdev[c] > kStdevGuard ? s.stdev[c] : kStdevGuard;
        for (std::size_t r = 0; r < X.n_rows; ++r) {
            out.at(r, c) = (X.at(r, c) - mean) / denom;
        }
    }
    // A constant column divided by the guard would blow up rounding noise;
    // map it to exactly zero instead.
    for (std::size_t c = 0; c < X.n_cols; ++c) {
        if (s.stdev[c] <= kStdevGuard) {
            for (std::size_t r = 0; r < X.n_rows; ++r) out.at(r, c) = 0.0;
        }
    }
    return out;
}

std::string Standardizer::to_json() const {
    json doc;
    doc["format"] = "fibcast-standardizer";
    doc["version"] = 1;
    doc["columns"] = json::array();
    for (std::size_t i = 0; i < names.size(); ++i) {
        json col;
        col["name"] = names[i];
        col["mean"] = mean[i];
        col["stdev"] = stdev[i];
        doc["columns"].push_back(col);
    }
    return doc.dump(2) + "\n";
}

Standardizer Standardizer::from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ModelFormatError(std::string("standardizer: invalid JSON: ") + e.what());
    }
    if (doc.value("format", "") != "fibcast-standardizer" || doc.value("version", 0) != 1) {
        throw ModelFormatError("standardizer: unknown format or version");
    }
    Standardizer s;
    for (const auto& col : doc.at("columns")) {
        s.names.push_back(col.at("name").get<std::string>());
        s.mean.push_back(col.at("mean").get<double>());
        s.stdev.push_back(col.at("stdev").get<double>());
    }
    return s;
}

void Standardizer::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write '" + path.string() + "'");
    out << to_json();
}

Standardizer Standardizer::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json(text);
}

} // namespace fibcast::preprocess
