#include "fibcast/samples.hpp"

#include <cmath>

#include "fibcast/common.hpp"
#include "fibcast/table.hpp"

namespace fibcast::data {
namespace {

bool in_season(timeutil::Minutes t, const SampleSchema& schema) {
    const timeutil::Civil c = timeutil::to_civil(t);
    const int md = c.month * 100 + c.day;
    const int lo = schema.season_start_month * 100 + schema.season_start_day;
    const int hi = schema.season_end_month * 100 + schema.season_end_day;
    return md >= lo && md <= hi;
}

} // namespace

const char* to_string(QualityClass q) {
    switch (q) {
    case QualityClass::Excellent: return "excellent";
    case QualityClass::Sufficient: return "sufficient";
    case QualityClass::OverLimit: return "over_limit";
    }
    return "?";
}

QualityClass classify_quality(long long ec, long long ent) {
    if (ec < 0 || ent < 0) {
        throw DomainError("classify_quality: counts must be non-negative");
    }
    if (ec < 150 && ent < 100) return QualityClass::Excellent;
    if (ec < 300 && ent < 185) return QualityClass::Sufficient;
    return QualityClass::OverLimit;
}

ParseResult parse_samples(const std::filesystem::path& path, const SampleSchema& schema) {
    const table::Table t = table::read_delimited(path);
    const std::size_t c_site = t.column(schema.site_col);
    const std::size_t c_time = t.column(schema.timestamp_col);
    const std::size_t c_ec = t.column(schema.ec_col);
    const std::size_t c_ent = t.column(schema.ent_col);
    const std::size_t c_ta = t.column(schema.air_temp_col);
    const std::size_t c_ts = t.column(schema.sea_temp_col);
    const std::size_t c_sal = t.column(schema.salinity_col);

    ParseResult result;
    result.records.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::size_t line = i + 2;
        const auto& row = t.rows[i];
        try {
            SampleRecord r;
            r.site_id = row[c_site];
            r.timestamp = timeutil::parse_iso8601(row[c_time]);
            const std::string ctx = "line " + std::to_string(line);
            r.ec = table::parse_int(row[c_ec], ctx + " ec");
            r.ent = table::parse_int(row[c_ent], ctx + " ent");
            r.air_temp = table::parse_double(row[c_ta], ctx + " air_temp");
            r.sea_temp = table::parse_double(row[c_ts], ctx + " sea_temp");
            r.salinity = table::parse_double(row[c_sal], ctx + " salinity");

            if (r.site_id.empty()) throw DataError("site must be non-empty");
            if (r.ec < 0) throw DataError("ec must be >= 0");
            if (r.ent < 0) throw DataError("ent must be >= 0");
            if (!(r.salinity >= 0.0 && r.salinity <= 45.0)) {
                throw DataError("salinity must be in [0, 45]");
            }
            if (!std::isfinite(r.air_temp) || !std::isfinite(r.sea_temp)) {
                throw DataError("non-finite in-situ measurement");
            }
            if (!in_season(r.timestamp, schema)) {
                throw DataError("timestamp outside the declared bathing season");
            }
            result.records.push_back(std::move(r));
        } catch (const Error& e) {
            result.errors.push_back({line, e.what()});
        }
    }
    return result;
}

void write_samples_csv(const std::filesystem::path& path,
                       const std::vector<SampleRecord>& records) {
    table::Table t;
    t.header = {"site", "timestamp", "ec", "ent", "air_temp", "sea_temp", "salinity"};
    t.rows.reserve(records.size());
    for (const auto& r : records) {
        t.rows.push_back({r.site_id, timeutil::format_iso8601(r.timestamp),
                          std::to_string(r.ec), std::to_string(r.ent),
                          table::format_double(r.air_temp), table::format_double(r.sea_temp),
                          table::format_double(r.salinity)});
    }
    table::write_delimited(path, t);
}

} // namespace fibcast::data
