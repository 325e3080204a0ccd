#include "solarpp/time.hpp"

#include <charconv>
#include <cstdio>
#include <string>

#include "solarpp/error.hpp"

namespace solarpp {
namespace {

using namespace std::chrono;

int read_int(std::string_view text, std::size_t pos, std::size_t len, std::string_view whole) {
  if (pos + len > text.size()) {
    throw Error(ErrorCode::kInvalidTime, "truncated time '" + std::string(whole) + "'");
  }
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, value);
  if (ec != std::errc{} || ptr != text.data() + pos + len) {
    throw Error(ErrorCode::kInvalidTime, "malformed time '" + std::string(whole) + "'");
  }
  return value;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '"')) {
    s.remove_suffix(1);
  }
  return s;
}

sys_days make_days(int y, int m, int d, std::string_view whole) {
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) {
    throw Error(ErrorCode::kInvalidTime, "invalid calendar date '" + std::string(whole) + "'");
  }
  return sys_days{ymd};
}

}  // namespace

sys_days parse_date(std::string_view text) {
  const auto s = trim(text);
  if (s.size() < 10 || s[4] != '-' || s[7] != '-') {
    throw Error(ErrorCode::kInvalidTime, "expected YYYY-MM-DD, got '" + std::string(text) + "'");
  }
  return make_days(read_int(s, 0, 4, text), read_int(s, 5, 2, text), read_int(s, 8, 2, text), text);
}

TimePoint parse_time(std::string_view text) {
  auto s = trim(text);
  const sys_days date = parse_date(s.substr(0, std::min<std::size_t>(10, s.size())));
  s.remove_prefix(10);
  int hh = 0, mm = 0, ss = 0;
  if (s.empty()) throw Error(ErrorCode::kInvalidTime, "missing clock time in '" + std::string(text) + "'");
  {
    if (s.front() != 'T' && s.front() != ' ') {
      throw Error(ErrorCode::kInvalidTime, "malformed time '" + std::string(text) + "'");
    }
    s.remove_prefix(1);
    if (s.size() < 5 || s[2] != ':') {
      throw Error(ErrorCode::kInvalidTime, "malformed time '" + std::string(text) + "'");
    }
    hh = read_int(s, 0, 2, text);
    mm = read_int(s, 3, 2, text);
    s.remove_prefix(5);
    if (!s.empty() && s.front() == ':') {
      ss = read_int(s, 1, 2, text);
      s.remove_prefix(3);
    }
    if (s == "Z" || s == "+00:00" || s == "+0000") {
      s = {};
    }
    if (!s.empty()) {
      throw Error(ErrorCode::kInvalidTime, "only UTC times are accepted: '" + std::string(text) + "'");
    }
    if (hh > 23 || mm > 59 || ss > 59) {
      throw Error(ErrorCode::kInvalidTime, "clock value out of range in '" + std::string(text) + "'");
    }
  }
  return TimePoint{date} + hours{hh} + minutes{mm} + seconds{ss};
}

std::string format_time(TimePoint t) {
  const auto day_start = floor<days>(t);
  const year_month_day ymd{day_start};
  const hh_mm_ss hms{t - day_start};
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

std::string format_date(sys_days d) {
  const year_month_day ymd{d};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

bool is_hour_aligned(TimePoint t) { return t.time_since_epoch().count() % 3600 == 0; }

int local_hour(TimePoint t, int utc_offset_hours) {
  const auto shifted = t + hours{utc_offset_hours};
  const auto since_midnight = shifted - floor<days>(shifted);
  return static_cast<int>(duration_cast<hours>(since_midnight).count());
}

int utc_year(TimePoint t) { return static_cast<int>(year_month_day{floor<days>(t)}.year()); }

double julian_day(TimePoint t) {
  // Unix epoch is JD 2440587.5.
  return 2440587.5 + static_cast<double>(t.time_since_epoch().count()) / 86400.0;
}

}  // namespace solarpp
