#include "vizplan/timeutil.hpp"

#include <cstdio>

namespace vizplan {

std::optional<TimeUnit> time_unit_from_string(const std::string &s) {
    if (s == "year") return TimeUnit::Year;
    if (s == "month") return TimeUnit::Month;
    if (s == "day") return TimeUnit::Day;
    if (s == "hour") return TimeUnit::Hour;
    return std::nullopt;
}

const char *time_unit_name(TimeUnit u) {
    switch (u) {
    case TimeUnit::Year: return "year";
    case TimeUnit::Month: return "month";
    case TimeUnit::Day: return "day";
    case TimeUnit::Hour: return "hour";
    }
    return "?";
}

// Days between 1970-01-01 and y-m-d in the proleptic Gregorian calendar.
// Era-based formulation; exact over the full int range we care about.
int64_t days_from_civil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);            // [0, 399]
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;  // [0, 365]
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;           // [0, 146096]
    return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int &y, unsigned &m, unsigned &d) {
    z += 719468;
    const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const int64_t yy = static_cast<int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    d = doy - (153 * mp + 2) / 5 + 1;
    m = mp + (mp < 10 ? 3 : -9);
    y = static_cast<int>(yy + (m <= 2));
}

static constexpr int64_t MS_PER_HOUR = 3600 * 1000LL;
static constexpr int64_t MS_PER_DAY = 24 * MS_PER_HOUR;

static int64_t floor_div(int64_t a, int64_t b) {
    int64_t q = a / b;
    if ((a % b) != 0 && ((a < 0) != (b < 0))) --q;
    return q;
}

int64_t truncate_ms(int64_t ms, TimeUnit unit) {
    if (unit == TimeUnit::Hour) return floor_div(ms, MS_PER_HOUR) * MS_PER_HOUR;
    int64_t days = floor_div(ms, MS_PER_DAY);
    if (unit == TimeUnit::Day) return days * MS_PER_DAY;
    int y;
    unsigned m, d;
    civil_from_days(days, y, m, d);
    if (unit == TimeUnit::Month) return days_from_civil(y, m, 1) * MS_PER_DAY;
    return days_from_civil(y, 1, 1) * MS_PER_DAY;
}

std::optional<int64_t> parse_iso8601(const std::string &s) {
    // Strict shape: digits and separators exactly where expected.
    const char *p = s.c_str();
    size_t n = s.size();
    auto digits = [&](size_t pos, size_t count) -> std::optional<int64_t> {
        if (pos + count > n) return std::nullopt;
        int64_t v = 0;
        for (size_t i = 0; i < count; ++i) {
            char c = p[pos + i];
            if (c < '0' || c > '9') return std::nullopt;
            v = v * 10 + (c - '0');
        }
        return v;
    };
    auto year = digits(0, 4);
    if (!year || n < 10 || p[4] != '-' || p[7] != '-') return std::nullopt;
    auto mon = digits(5, 2), day = digits(8, 2);
    if (!mon || !day || *mon < 1 || *mon > 12 || *day < 1) return std::nullopt;
    static const int month_days[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = *year % 4 == 0 && (*year % 100 != 0 || *year % 400 == 0);
    const int64_t dmax = (*mon == 2 && leap) ? 29 : month_days[*mon - 1];
    if (*day > dmax) return std::nullopt;
    int64_t hh = 0, mi = 0, ss = 0, ms = 0;
    size_t pos = 10;
    if (pos < n && (p[pos] == 'T' || p[pos] == ' ')) {
        ++pos;
        auto h = digits(pos, 2);
        if (!h || pos + 2 >= n || p[pos + 2] != ':') return std::nullopt;
        auto m2 = digits(pos + 3, 2);
        if (!m2) return std::nullopt;
        hh = *h;
        mi = *m2;
        pos += 5;
        if (pos < n && p[pos] == ':') {
            auto s2 = digits(pos + 1, 2);
            if (!s2) return std::nullopt;
            ss = *s2;
            pos += 3;
            if (pos < n && p[pos] == '.') {
                auto m3 = digits(pos + 1, 3);
                if (!m3) return std::nullopt;
                ms = *m3;
                pos += 4;
            }
        }
        if (hh > 23 || mi > 59 || ss > 59) return std::nullopt;
    }
    if (pos < n && p[pos] == 'Z') ++pos;
    if (pos != n) return std::nullopt;
    int64_t days = days_from_civil(static_cast<int>(*year), static_cast<unsigned>(*mon),
                                   static_cast<unsigned>(*day));
    return days * MS_PER_DAY + hh * MS_PER_HOUR + mi * 60000 + ss * 1000 + ms;
}

std::string format_iso8601(int64_t ms) {
    int64_t days = floor_div(ms, MS_PER_DAY);
    int64_t rem = ms - days * MS_PER_DAY;
    int y;
    unsigned mo, d;
    civil_from_days(days, y, mo, d);
    int hh = static_cast<int>(rem / MS_PER_HOUR);
    rem %= MS_PER_HOUR;
    int mi = static_cast<int>(rem / 60000);
    rem %= 60000;
    int ss = static_cast<int>(rem / 1000);
    int frac = static_cast<int>(rem % 1000);
    char buf[40];
    if (frac != 0) {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02d.%03dZ", y, mo, d, hh, mi,
                      ss, frac);
    } else {
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", y, mo, d, hh, mi, ss);
    }
    return buf;
}

} // namespace vizplan
