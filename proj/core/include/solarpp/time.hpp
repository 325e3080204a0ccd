#pragma once

#include <chrono>
#include <string>
#include <string_view>

namespace solarpp {

/// UTC instant at one-second resolution. Post-alignment series carry
/// hour-end stamps with zero minutes and seconds.
using TimePoint = std::chrono::sys_seconds;

/// Parses "YYYY-MM-DD HH:MM[:SS]" with an optional 'T' separator and an
/// optional trailing "Z" or "+00:00". Non-UTC offsets are rejected.
TimePoint parse_time(std::string_view text);

/// Formats as "YYYY-MM-DDTHH:MM:SSZ".
std::string format_time(TimePoint t);

/// Parses a calendar date "YYYY-MM-DD" to its 00:00 UTC instant.
std::chrono::sys_days parse_date(std::string_view text);

/// Formats as "YYYY-MM-DD".
std::string format_date(std::chrono::sys_days d);

bool is_hour_aligned(TimePoint t);

/// Local hour 0..23 for a fixed UTC offset in hours (no DST).
int local_hour(TimePoint t, int utc_offset_hours);

/// Calendar year of the UTC instant.
int utc_year(TimePoint t);

/// Julian day (UT) of the instant.
double julian_day(TimePoint t);

}  // namespace solarpp
