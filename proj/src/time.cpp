#include "fibcast/time.hpp"

#include <array>
#include <cstdio>

#include "fibcast/common.hpp"

namespace fibcast::timeutil {
namespace {

// Days since 1970-01-01 for a proleptic Gregorian civil date.
std::int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return static_cast<std::int64_t>(era) * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, int& y, unsigned& m, unsigned& d) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yy + (m <= 2));
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

int parse_int(std::string_view s, std::size_t pos, std::size_t len) {
    int value = 0;
    for (std::size_t i = pos; i < pos + len; ++i) {
        if (i >= s.size() || !is_digit(s[i])) {
            throw DataError("invalid timestamp: '" + std::string(s) + "'");
        }
        value = value * 10 + (s[i] - '0');
    }
    return value;
}

} // namespace

Minutes from_civil(const Civil& c) {
    const std::int64_t days = days_from_civil(c.year, static_cast<unsigned>(c.month),
                                              static_cast<unsigned>(c.day));
    return days * kDay + c.hour * kHour + c.minute;
}

Civil to_civil(Minutes t) {
    std::int64_t days = t / kDay;
    Minutes rem = t - days * kDay;
    if (rem < 0) {
        rem += kDay;
        --days;
    }
    Civil c;
    unsigned m = 0, d = 0;
    civil_from_days(days, c.year, m, d);
    c.month = static_cast<int>(m);
    c.day = static_cast<int>(d);
    c.hour = static_cast<int>(rem / kHour);
    c.minute = static_cast<int>(rem % kHour);
    return c;
}

int year_of(Minutes t) { return to_civil(t).year; }

Minutes parse_iso8601(std::string_view s) {
    // Minimum form: YYYY-MM-DDTHH:MM (16 chars).
    if (s.size() < 16 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
        s[13] != ':') {
        throw DataError("invalid timestamp: '" + std::string(s) + "'");
    }
    Civil c;
    c.year = parse_int(s, 0, 4);
    c.month = parse_int(s, 5, 2);
    c.day = parse_int(s, 8, 2);
    c.hour = parse_int(s, 11, 2);
    c.minute = parse_int(s, 14, 2);

    std::size_t pos = 16;
    if (pos + 1 < s.size() && s[pos] == ':') {
        const int sec = parse_int(s, pos + 1, 2);
        if (sec != 0) {
            throw DataError("timestamp has sub-minute precision: '" + std::string(s) + "'");
        }
        pos += 3;
    }
    if (pos < s.size() && s[pos] == 'Z') ++pos;
    if (pos != s.size()) {
        throw DataError("invalid timestamp: '" + std::string(s) + "'");
    }

    if (c.month < 1 || c.month > 12 || c.day < 1 || c.day > 31 || c.hour > 23 || c.minute > 59) {
        throw DataError("timestamp field out of range: '" + std::string(s) + "'");
    }
    const Minutes t = from_civil(c);
    const Civil back = to_civil(t);
    if (back.month != c.month || back.day != c.day) {
        throw DataError("nonexistent calendar date: '" + std::string(s) + "'");
    }
    return t;
}

std::string format_iso8601(Minutes t) {
    const Civil c = to_civil(t);
    std::array<char, 24> buf{};
    std::snprintf(buf.data(), buf.size(), "%04d-%02d-%02dT%02d:%02d", c.year, c.month, c.day,
                  c.hour, c.minute);
    return std::string(buf.data());
}

} // namespace fibcast::timeutil
