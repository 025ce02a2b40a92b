#ifndef FIBCAST_SAMPLES_HPP
#define FIBCAST_SAMPLES_HPP

#include <filesystem>
#include <string>
#include <vector>

#include "fibcast/time.hpp"

namespace fibcast::data {

// Per-sample bathing-water class under the Croatian criteria.
enum class QualityClass { Excellent, Sufficient, OverLimit };

const char* to_string(QualityClass q);

// Excellent: ec < 150 and ent < 100. Sufficient: ec < 300 and ent < 185.
// Anything else is over the limit. Bounds are strict.
QualityClass classify_quality(long long ec, long long ent);

// One routine-monitoring observation.
struct SampleRecord {
    std::string site_id;
    timeutil::Minutes timestamp = 0;
    long long ec = 0;  // CFU/100 mL
    long long ent = 0; // CFU/100 mL
    double air_temp = 0.0;
    double sea_temp = 0.0;
    double salinity = 0.0;
};

// Column map for the samples table plus the declared bathing-season window
// (month/day bounds applied to every year).
struct SampleSchema {
    std::string site_col = "site";
    std::string timestamp_col = "timestamp";
    std::string ec_col = "ec";
    std::string ent_col = "ent";
    std::string air_temp_col = "air_temp";
    std::string sea_temp_col = "sea_temp";
    std::string salinity_col = "salinity";
    int season_start_month = 5;
    int season_start_day = 15;
    int season_end_month = 9;
    int season_end_day = 30;
};

struct RowError {
    std::size_t line = 0; // 1-based file line number
    std::string message;
};

struct ParseResult {
    std::vector<SampleRecord> records;
    std::vector<RowError> errors; // invalid rows, collected rather than dropped silently
};

// Reads a delimited samples table. A missing column raises SchemaError;
// individual bad rows are reported in ParseResult::errors.
ParseResult parse_samples(const std::filesystem::path& path, const SampleSchema& schema = {});

void write_samples_csv(const std::filesystem::path& path,
                       const std::vector<SampleRecord>& records);

} // namespace fibcast::data

#endif
