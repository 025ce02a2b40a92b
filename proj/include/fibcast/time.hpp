#ifndef FIBCAST_TIME_HPP
#define FIBCAST_TIME_HPP

#include <cstdint>
#include <string>
#include <string_view>

namespace fibcast::timeutil {

// All timestamps are UTC minutes since 1970-01-01T00:00. Minute resolution
// is the native resolution of the monitoring records.
using Minutes = std::int64_t;

constexpr Minutes kHour = 60;
constexpr Minutes kDay = 24 * kHour;

struct Civil {
    int year = 1970;
    int month = 1; // 1..12
    int day = 1;   // 1..31
    int hour = 0;
    int minute = 0;
};

Minutes from_civil(const Civil& c);
Civil to_civil(Minutes t);
int year_of(Minutes t);

// Accepts "YYYY-MM-DDTHH:MM" with optional ":SS" (seconds must be zero) and
// optional trailing "Z". A space may stand in for the 'T'.
Minutes parse_iso8601(std::string_view s);

// Emits "YYYY-MM-DDTHH:MM".
std::string format_iso8601(Minutes t);

} // namespace fibcast::timeutil

#endif
