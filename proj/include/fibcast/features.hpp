#ifndef FIBCAST_FEATURES_HPP
#define FIBCAST_FEATURES_HPP

#include <cstddef>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fibcast/samples.hpp"
#include "fibcast/series.hpp"
#include "fibcast/time.hpp"

namespace fibcast::data {

// Antecedent interval configuration: cumulative windows and hourly lags
// measured back from the sampling instant.
struct AntecedentWindowSpec {
    std::vector<timeutil::Minutes> cumulative_windows; // strictly increasing
    std::vector<int> lag_hours;

    static AntecedentWindowSpec defaults(); // {4 h, 2, 3, 4, 7, 14, 30, 60 d}, lags {1,2,3,4}
    void validate() const;
};

// One engineered column. The registry is data so alternative layouts can
// be declared in a manifest without code changes.
struct ColumnSpec {
    enum class Kind { SampleField, Instant, Window, Lag };
    std::string name;
    Kind kind = Kind::Instant;
    std::string source;             // sample field name or series name
    timeutil::Minutes amount = 0;   // window horizon or lag
};

class FeatureRegistry {
public:
    explicit FeatureRegistry(std::vector<ColumnSpec> columns);

    // The 31 columns of the standard layout: 11 instantaneous values,
    // 8 cumulative-precipitation windows, 8 cumulative-GHI windows and
    // 4 GHI lags.
    static FeatureRegistry standard(const AntecedentWindowSpec& spec = AntecedentWindowSpec::defaults());

    const std::vector<ColumnSpec>& columns() const { return columns_; }
    std::size_t size() const { return columns_.size(); }
    std::vector<std::string> names() const;
    std::size_t index_of(const std::string& name) const; // throws SchemaError

    std::string to_manifest_json() const;
    static FeatureRegistry from_manifest_json(const std::string& text);
    static FeatureRegistry load_manifest(const std::filesystem::path& path);
    void save_manifest(const std::filesystem::path& path) const;

private:
    std::vector<ColumnSpec> columns_;
};

// Row-major design matrix with named columns. Row ids track provenance
// (sample index in the originating dataset) so evaluation harnesses can
// detect leakage across fold boundaries.
struct FeatureMatrix {
    std::vector<std::string> names;
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> values;        // n_rows * n_cols
    std::vector<std::size_t> row_ids;  // size n_rows
    bool standardized = false;

    double at(std::size_t r, std::size_t c) const { return values[r * n_cols + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * n_cols + c]; }
    std::span<const double> row(std::size_t r) const {
        return {values.data() + r * n_cols, n_cols};
    }
    std::vector<double> column(std::size_t c) const;
    std::size_t col_index(const std::string& name) const; // throws SchemaError

    FeatureMatrix select_rows(const std::vector<std::size_t>& rows) const;
};

using EnvMap = std::map<std::string, HourlySeries>;

// Builds one feature row per sample, columns in registry order. Any
// per-sample failure aborts with the sample id and offending column.
FeatureMatrix build_features(const std::vector<SampleRecord>& samples, const EnvMap& env,
                             const FeatureRegistry& registry);
FeatureMatrix build_features_serial(const std::vector<SampleRecord>& samples, const EnvMap& env,
                                    const FeatureRegistry& registry);

void write_matrix_csv(const std::filesystem::path& path, const FeatureMatrix& m);
FeatureMatrix read_matrix_csv(const std::filesystem::path& path);

} // namespace fibcast::data

#endif
