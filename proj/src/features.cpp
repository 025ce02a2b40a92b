#include "fibcast/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "fibcast/common.hpp"
#include "fibcast/parallel.hpp"
#include "fibcast/table.hpp"

namespace fibcast::data {

using json = nlohmann::ordered_json;
using timeutil::kDay;
using timeutil::kHour;

AntecedentWindowSpec AntecedentWindowSpec::defaults() {
    AntecedentWindowSpec s;
    s.cumulative_windows = {4 * kHour, 2 * kDay, 3 * kDay, 4 * kDay,
                            7 * kDay, 14 * kDay, 30 * kDay, 60 * kDay};
    s.lag_hours = {1, 2, 3, 4};
    return s;
}

void AntecedentWindowSpec::validate() const {
    timeutil::Minutes prev = 0;
    for (const auto w : cumulative_windows) {
        if (w <= prev) {
            throw ConfigError("cumulative windows must be positive and strictly increasing");
        }
        prev = w;
    }
    for (const int h : lag_hours) {
        if (h <= 0) throw ConfigError("lag hours must be positive");
    }
}

namespace {

std::string window_suffix(timeutil::Minutes w) {
    if (w % kDay == 0) return std::to_string(w / kDay) + "d";
    if (w % kHour == 0) return std::to_string(w / kHour) + "h";
    return std::to_string(w) + "m";
}

const char* kind_name(ColumnSpec::Kind k) {
    switch (k) {
    case ColumnSpec::Kind::SampleField: return "sample";
    case ColumnSpec::Kind::Instant: return "instant";
    case ColumnSpec::Kind::Window: return "window";
    case ColumnSpec::Kind::Lag: return "lag";
    }
    return "?";
}

ColumnSpec::Kind kind_from_name(const std::string& s) {
    if (s == "sample") return ColumnSpec::Kind::SampleField;
    if (s == "instant") return ColumnSpec::Kind::Instant;
    if (s == "window") return ColumnSpec::Kind::Window;
    if (s == "lag") return ColumnSpec::Kind::Lag;
    throw ConfigError("unknown column kind '" + s + "'");
}

double sample_field(const SampleRecord& r, const std::string& field) {
    if (field == "air_temp") return r.air_temp;
    if (field == "sea_temp") return r.sea_temp;
    if (field == "salinity") return r.salinity;
    throw ConfigError("unknown sample field '" + field + "'");
}

const HourlySeries& series_for(const EnvMap& env, const std::string& name) {
    const auto it = env.find(name);
    if (it == env.end()) {
        throw DataError("no environmental series named '" + name + "'");
    }
    return it->second;
}

void fill_row(const SampleRecord& sample, const EnvMap& env, const FeatureRegistry& registry,
              double* out) {
    const auto& cols = registry.columns();
    for (std::size_t c = 0; c < cols.size(); ++c) {
        const ColumnSpec& spec = cols[c];
        double v = 0.0;
        try {
            switch (spec.kind) {
            case ColumnSpec::Kind::SampleField:
                v = sample_field(sample, spec.source);
                break;
            case ColumnSpec::Kind::Instant:
                v = interp_at(series_for(env, spec.source), sample.timestamp);
                break;
            case ColumnSpec::Kind::Window:
                v = cumulative_window(series_for(env, spec.source), sample.timestamp,
                                      spec.amount);
                break;
            case ColumnSpec::Kind::Lag:
                v = lagged_value(series_for(env, spec.source), sample.timestamp, spec.amount);
                break;
            }
        } catch (const Error& e) {
            throw DataError("sample " + sample.site_id + "@" +
                            timeutil::format_iso8601(sample.timestamp) + ", feature '" +
                            spec.name + "': " + e.what());
        }
        if (!std::isfinite(v)) {
            throw DataError("sample " + sample.site_id + "@" +
                            timeutil::format_iso8601(sample.timestamp) + ", feature '" +
                            spec.name + "': non-finite value");
        }
        out[c] = v;
    }
}

} // namespace

FeatureRegistry::FeatureRegistry(std::vector<ColumnSpec> columns) : columns_(std::move(columns)) {
    if (columns_.empty()) {
        throw ConfigError("feature registry must declare at least one column");
    }
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name.empty()) throw ConfigError("feature column without a name");
        for (std::size_t j = i + 1; j < columns_.size(); ++j) {
            if (columns_[i].name == columns_[j].name) {
                throw ConfigError("duplicate feature column '" + columns_[i].name + "'");
            }
        }
        if (columns_[i].kind == ColumnSpec::Kind::Window && columns_[i].amount <= 0) {
            throw ConfigError("window column '" + columns_[i].name + "' needs a positive horizon");
        }
        if (columns_[i].kind == ColumnSpec::Kind::Lag && columns_[i].amount <= 0) {
            throw ConfigError("lag column '" + columns_[i].name + "' needs a positive lag");
        }
    }
}

FeatureRegistry FeatureRegistry::standard(const AntecedentWindowSpec& spec) {
    spec.validate();
    using K = ColumnSpec::Kind;
    std::vector<ColumnSpec> cols = {
        {"T_a", K::SampleField, "air_temp", 0},
        {"S", K::SampleField, "salinity", 0},
        {"T_s", K::SampleField, "sea_temp", 0},
        {"WL", K::Instant, "water_level", 0},
        {"GHI", K::Instant, "ghi", 0},
        {"T_d", K::Instant, "dewpoint", 0},
        {"PW", K::Instant, "precipitable_water", 0},
        {"RH", K::Instant, "humidity", 0},
        {"SP", K::Instant, "pressure", 0},
        {"WS", K::Instant, "wind_speed", 0},
        {"WD", K::Instant, "wind_direction", 0},
    };
    for (const auto w : spec.cumulative_windows) {
        cols.push_back({"CPrec_" + window_suffix(w), K::Window, "precipitation", w});
    }
    for (const auto w : spec.cumulative_windows) {
        cols.push_back({"CGHI_" + window_suffix(w), K::Window, "ghi", w});
    }
    for (const int h : spec.lag_hours) {
        cols.push_back({"GHI_" + std::to_string(h) + "h", K::Lag, "ghi", h * kHour});
    }
    return FeatureRegistry(std::move(cols));
}

std::vector<std::string> FeatureRegistry::names() const {
    std::vector<std::string> out;
    out.reserve(columns_.size());
    for (const auto& c : columns_) out.push_back(c.name);
    return out;
}

std::size_t FeatureRegistry::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name == name) return i;
    }
    throw SchemaError("registry has no column '" + name + "'");
}

std::string FeatureRegistry::to_manifest_json() const {
    json doc;
    doc["format"] = "fibcast-feature-registry";
    doc["version"] = 1;
    doc["columns"] = json::array();
    for (const auto& c : columns_) {
        json col;
        col["name"] = c.name;
        col["kind"] = kind_name(c.kind);
        col["source"] = c.source;
        if (c.kind == ColumnSpec::Kind::Window || c.kind == ColumnSpec::Kind::Lag) {
            col["minutes"] = c.amount;
        }
        doc["columns"].push_back(col);
    }
    return doc.dump(2) + "\n";
}

FeatureRegistry FeatureRegistry::from_manifest_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("registry manifest is not valid JSON: ") + e.what());
    }
    if (!doc.is_object() || doc.value("format", "") != "fibcast-feature-registry") {
        throw ConfigError("registry manifest: missing format tag");
    }
    if (doc.value("version", 0) != 1) {
        throw ConfigError("registry manifest: unsupported version");
    }
    std::vector<ColumnSpec> cols;
    for (const auto& col : doc.at("columns")) {
        ColumnSpec c;
        c.name = col.at("name").get<std::string>();
        c.kind = kind_from_name(col.at("kind").get<std::string>());
        c.source = col.at("source").get<std::string>();
        if (c.kind == ColumnSpec::Kind::Window || c.kind == ColumnSpec::Kind::Lag) {
            c.amount = col.at("minutes").get<timeutil::Minutes>();
        }
        cols.push_back(std::move(c));
    }
    return FeatureRegistry(std::move(cols));
}

FeatureRegistry FeatureRegistry::load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open registry manifest '" + path.string() + "'");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_manifest_json(text);
}

void FeatureRegistry::save_manifest(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write registry manifest '" + path.string() + "'");
    out << to_manifest_json();
}

std::vector<double> FeatureMatrix::column(std::size_t c) const {
    std::vector<double> out(n_rows);
    for (std::size_t r = 0; r < n_rows; ++r) out[r] = at(r, c);
    return out;
}

std::size_t FeatureMatrix::col_index(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return i;
    }
    throw SchemaError("matrix has no column '" + name + "'");
}

FeatureMatrix FeatureMatrix::select_rows(const std::vector<std::size_t>& rows) const {
    FeatureMatrix out;
    out.names = names;
    out.n_rows = rows.size();
    out.n_cols = n_cols;
    out.standardized = standardized;
    out.values.resize(rows.size() * n_cols);
    out.row_ids.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const std::size_t r = rows[i];
        std::copy_n(values.data() + r * n_cols, n_cols, out.values.data() + i * n_cols);
        out.row_ids[i] = row_ids.empty() ? r : row_ids[r];
    }
    return out;
}

FeatureMatrix build_features_serial(const std::vector<SampleRecord>& samples, const EnvMap& env,
                                    const FeatureRegistry& registry) {
    FeatureMatrix m;
    m.names = registry.names();
    m.n_rows = samples.size();
    m.n_cols = registry.size();
    m.values.resize(m.n_rows * m.n_cols);
    m.row_ids.resize(m.n_rows);
    for (std::size_t r = 0; r < samples.size(); ++r) {
        fill_row(samples[r], env, registry, m.values.data() + r * m.n_cols);
        m.row_ids[r] = r;
    }
    return m;
}

FeatureMatrix build_features(const std::vector<SampleRecord>& samples, const EnvMap& env,
                             const FeatureRegistry& registry) {
    if (!par::enabled() || samples.size() < 2) {
        return build_features_serial(samples, env, registry);
    }
    FeatureMatrix m;
    m.names = registry.names();
    m.n_rows = samples.size();
    m.n_cols = registry.size();
    m.values.resize(m.n_rows * m.n_cols);
    m.row_ids.resize(m.n_rows);

    // Rows are independent; each writes only its own slot, so output is
    // identical to the serial path for any thread count.
    std::vector<std::string> failures(samples.size());
    bool failed = false;
    const std::int64_t n = static_cast<std::int64_t>(samples.size());
#pragma omp parallel for schedule(static)
    for (std::int64_t r = 0; r < n; ++r) {
        try {
            fill_row(samples[r], env, registry, m.values.data() + r * m.n_cols);
            m.row_ids[r] = static_cast<std::size_t>(r);
        } catch (const Error& e) {
            failures[r] = e.what();
#pragma omp atomic write
            failed = true;
        }
    }
    if (failed) {
        for (const auto& f : failures) {
            if (!f.empty()) throw DataError(f);
        }
    }
    return m;
}

void write_matrix_csv(const std::filesystem::path& path, const FeatureMatrix& m) {
    table::Table t;
    t.header = m.names;
    t.rows.reserve(m.n_rows);
    for (std::size_t r = 0; r < m.n_rows; ++r) {
        std::vector<std::string> row;
        row.reserve(m.n_cols);
        for (std::size_t c = 0; c < m.n_cols; ++c) {
            row.push_back(table::format_double(m.at(r, c)));
        }
        t.rows.push_back(std::move(row));
    }
    table::write_delimited(path, t);
}

FeatureMatrix read_matrix_csv(const std::filesystem::path& path) {
    const table::Table t = table::read_delimited(path);
    FeatureMatrix m;
    m.names = t.header;
    m.n_rows = t.rows.size();
    m.n_cols = t.header.size();
    m.values.resize(m.n_rows * m.n_cols);
    m.row_ids.resize(m.n_rows);
    for (std::size_t r = 0; r < m.n_rows; ++r) {
        m.row_ids[r] = r;
        for (std::size_t c = 0; c < m.n_cols; ++c) {
            m.at(r, c) = table::parse_double(
                t.rows[r][c], path.string() + " line " + std::to_string(r + 2));
        }
    }
    return m;
}

} // namespace fibcast::data
