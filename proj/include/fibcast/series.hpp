#ifndef FIBCAST_SERIES_HPP
#define FIBCAST_SERIES_HPP

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "fibcast/time.hpp"

namespace fibcast::data {

// A time-indexed scalar environmental signal sampled at most one hour
// apart. Timestamps are strictly increasing; gaps wider than one hour
// inside the covered span are rejected at construction so that window
// sums never silently run over missing data.
class HourlySeries {
public:
    HourlySeries(std::string name, std::vector<timeutil::Minutes> times,
                 std::vector<double> values);

    const std::string& name() const { return name_; }
    std::size_t size() const { return times_.size(); }
    timeutil::Minutes first_time() const { return times_.front(); }
    timeutil::Minutes last_time() const { return times_.back(); }
    const std::vector<timeutil::Minutes>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }

    // Prefix sums of values; prefix()[k] = sum of the first k values.
    const std::vector<double>& prefix() const { return prefix_; }

private:
    std::string name_;
    std::vector<timeutil::Minutes> times_;
    std::vector<double> values_;
    std::vector<double> prefix_;
};

HourlySeries read_series_csv(const std::filesystem::path& path, const std::string& name);
void write_series_csv(const std::filesystem::path& path, const HourlySeries& s);

// Value at time t: exact at a knot, linear between bracketing knots.
// No extrapolation; t outside coverage raises OutOfRangeError.
double interp_at(const HourlySeries& s, timeutil::Minutes t);

// Sum of the values whose timestamps fall in (t - horizon, t]. Each value
// carries the mass of the hour ending at its timestamp, so when the window
// start cuts into that hour the earliest value is weighted by its
// fractional overlap.
double cumulative_window(const HourlySeries& s, timeutil::Minutes t, timeutil::Minutes horizon);

// interp_at(s, t - lag).
double lagged_value(const HourlySeries& s, timeutil::Minutes t, timeutil::Minutes lag);

} // namespace fibcast::data

#endif
