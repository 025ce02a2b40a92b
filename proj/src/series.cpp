#include "fibcast/series.hpp"

#include <algorithm>
#include <cmath>

#include "fibcast/common.hpp"
#include "fibcast/table.hpp"

namespace fibcast::data {

using timeutil::Minutes;

HourlySeries::HourlySeries(std::string name, std::vector<Minutes> times,
                           std::vector<double> values)
    : name_(std::move(name)), times_(std::move(times)), values_(std::move(values)) {
    if (times_.empty()) {
        throw DataError("series '" + name_ + "' has no points");
    }
    if (times_.size() != values_.size()) {
        throw DataError("series '" + name_ + "': timestamp/value count mismatch");
    }
    for (std::size_t i = 0; i < times_.size(); ++i) {
        if (!std::isfinite(values_[i])) {
            throw DataError("series '" + name_ + "': non-finite value at " +
                            timeutil::format_iso8601(times_[i]));
        }
        if (i > 0) {
            const Minutes gap = times_[i] - times_[i - 1];
            if (gap <= 0) {
                throw DataError("series '" + name_ + "': timestamps not strictly increasing at " +
                                timeutil::format_iso8601(times_[i]));
            }
            if (gap > timeutil::kHour) {
                throw DataError("series '" + name_ + "': gap wider than 1 h between " +
                                timeutil::format_iso8601(times_[i - 1]) + " and " +
                                timeutil::format_iso8601(times_[i]));
            }
        }
    }
    prefix_.resize(times_.size() + 1, 0.0);
    for (std::size_t i = 0; i < values_.size(); ++i) {
        prefix_[i + 1] = prefix_[i] + values_[i];
    }
}

HourlySeries read_series_csv(const std::filesystem::path& path, const std::string& name) {
    const table::Table t = table::read_delimited(path);
    const std::size_t tcol = t.column("timestamp");
    const std::size_t vcol = t.column("value");
    std::vector<Minutes> times;
    std::vector<double> values;
    times.reserve(t.rows.size());
    values.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const std::string ctx = path.string() + " line " + std::to_string(i + 2);
        times.push_back(timeutil::parse_iso8601(t.rows[i][tcol]));
        values.push_back(table::parse_double(t.rows[i][vcol], ctx));
    }
    return HourlySeries(name, std::move(times), std::move(values));
}

void write_series_csv(const std::filesystem::path& path, const HourlySeries& s) {
    table::Table t;
    t.header = {"timestamp", "value"};
    t.rows.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        t.rows.push_back({timeutil::format_iso8601(s.times()[i]),
                          table::format_double(s.values()[i])});
    }
    table::write_delimited(path, t);
}

double interp_at(const HourlySeries& s, Minutes t) {
    const auto& ts = s.times();
    const auto& vs = s.values();
    if (t < ts.front() || t > ts.back()) {
        throw OutOfRangeError("series '" + s.name() + "': " + timeutil::format_iso8601(t) +
                              " outside coverage [" + timeutil::format_iso8601(ts.front()) +
                              ", " + timeutil::format_iso8601(ts.back()) + "]");
    }
    const auto it = std::lower_bound(ts.begin(), ts.end(), t);
    const std::size_t hi = static_cast<std::size_t>(it - ts.begin());
    if (ts[hi] == t) return vs[hi];
    const std::size_t lo = hi - 1;
    const double alpha = static_cast<double>(t - ts[lo]) / static_cast<double>(ts[hi] - ts[lo]);
    return (1.0 - alpha) * vs[lo] + alpha * vs[hi];
}

double cumulative_window(const HourlySeries& s, Minutes t, Minutes horizon) {
    if (horizon <= 0) {
        throw DomainError("cumulative_window: horizon must be positive");
    }
    const auto& ts = s.times();
    const Minutes start = t - horizon;
    if (start < ts.front() || t > ts.back()) {
        throw OutOfRangeError("series '" + s.name() + "': window [" +
                              timeutil::format_iso8601(start) + ", " +
                              timeutil::format_iso8601(t) + "] outside coverage [" +
                              timeutil::format_iso8601(ts.front()) + ", " +
                              timeutil::format_iso8601(ts.back()) + "]");
    }
    // Knots with timestamp in (start, t].
    const std::size_t lo =
        static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), start) - ts.begin());
    const std::size_t hi =
        static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
    if (lo >= hi) return 0.0;

    double sum = s.prefix()[hi] - s.prefix()[lo];
    // The earliest included value represents the hour ending at its
    // timestamp; scale it by the window's overlap with that hour.
    const double overlap = static_cast<double>(ts[lo] - start) / static_cast<double>(timeutil::kHour);
    if (overlap < 1.0) {
        sum -= (1.0 - overlap) * s.values()[lo];
    }
    return sum;
}

double lagged_value(const HourlySeries& s, Minutes t, Minutes lag) {
    if (lag < 0) {
        throw DomainError("lagged_value: lag must be non-negative");
    }
    return interp_at(s, t - lag);
}

} // namespace fibcast::data
