#ifndef VIZPLAN_TIMEUTIL_HPP
#define VIZPLAN_TIMEUTIL_HPP

#include <cstdint>
#include <optional>
#include <string>

namespace vizplan {

//! Calendar granularities understood by the timeunit transform and by
//! date_trunc() in the query grammar.
enum class TimeUnit { Year, Month, Day, Hour };

std::optional<TimeUnit> time_unit_from_string(const std::string &s);
const char *time_unit_name(TimeUnit u);

//! Civil date <-> epoch conversions. All timestamps are UTC epoch
//! milliseconds; no local time zones anywhere in the system.
int64_t days_from_civil(int y, unsigned m, unsigned d);
void civil_from_days(int64_t z, int &y, unsigned &m, unsigned &d);

//! Truncate an epoch-ms timestamp down to the start of the given unit.
int64_t truncate_ms(int64_t ms, TimeUnit unit);

//! Parse ISO-8601: YYYY-MM-DD with optional THH:MM[:SS[.mmm]] and optional
//! trailing Z. Returns nothing if the text is not a full valid timestamp.
std::optional<int64_t> parse_iso8601(const std::string &s);

//! Format as YYYY-MM-DDTHH:MM:SS[.mmm]Z (milliseconds only when nonzero).
std::string format_iso8601(int64_t ms);

} // namespace vizplan

#endif
