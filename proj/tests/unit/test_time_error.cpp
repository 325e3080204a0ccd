#include <gtest/gtest.h>

#include "solarpp/error.hpp"
#include "solarpp/time.hpp"

using namespace solarpp;
using namespace std::chrono;

TEST(Time, ParsesCommonIsoForms) {
  const TimePoint expected = sys_days{year{2017} / 1 / 1} + hours{1};
  EXPECT_EQ(parse_time("2017-01-01 01:00"), expected);
  EXPECT_EQ(parse_time("2017-01-01T01:00:00"), expected);
  EXPECT_EQ(parse_time("2017-01-01T01:00:00Z"), expected);
  EXPECT_EQ(parse_time("2017-01-01 01:00:00+00:00"), expected);
}

TEST(Time, RejectsGarbageAndOffsets) {
  for (const char* bad : {"", "2017-13-01 00:00", "2017-01-01", "yesterday", "2017-01-01T01:00+02:00",
                          "2017-02-30 00:00"}) {
    try {
      parse_time(bad);
      ADD_FAILURE() << "accepted " << bad;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kInvalidTime) << bad;
    }
  }
}

TEST(Time, FormatRoundTrip) {
  const TimePoint t = sys_days{year{2020} / 6 / 21} + hours{19} + minutes{30};
  EXPECT_EQ(format_time(t), "2020-06-21T19:30:00Z");
  EXPECT_EQ(parse_time(format_time(t)), t);
  EXPECT_EQ(format_date(sys_days{year{2019} / 12 / 31}), "2019-12-31");
}

TEST(Time, LocalHourUsesFixedOffset) {
  const TimePoint t = sys_days{year{2020} / 1 / 1} + hours{3};
  EXPECT_EQ(local_hour(t, -8), 19);
  EXPECT_EQ(local_hour(t, 0), 3);
  EXPECT_EQ(local_hour(t, 5), 8);
  // No daylight saving: the same UTC hour maps to the same local hour in summer.
  EXPECT_EQ(local_hour(sys_days{year{2020} / 7 / 1} + hours{3}, -8), 19);
}

TEST(Time, HourAlignmentAndYear) {
  EXPECT_TRUE(is_hour_aligned(parse_time("2018-03-05 14:00")));
  EXPECT_FALSE(is_hour_aligned(parse_time("2018-03-05 14:30")));
  EXPECT_EQ(utc_year(parse_time("2019-12-31 23:00")), 2019);
  EXPECT_EQ(utc_year(parse_time("2020-01-01 00:00")), 2020);
}

TEST(Time, JulianDayOfJ2000) { EXPECT_DOUBLE_EQ(julian_day(parse_time("2000-01-01 12:00")), 2451545.0); }

TEST(Error, CategoriesMapToExitCodes) {
  EXPECT_EQ(exit_code(category_of(ErrorCode::kInvalidConfig)), 2);
  EXPECT_EQ(exit_code(category_of(ErrorCode::kInvalidStrategy)), 2);
  EXPECT_EQ(exit_code(category_of(ErrorCode::kMissingColumn)), 3);
  EXPECT_EQ(exit_code(category_of(ErrorCode::kEmptySplit)), 3);
  EXPECT_EQ(exit_code(category_of(ErrorCode::kNonConvergence)), 4);
  EXPECT_EQ(exit_code(category_of(ErrorCode::kInsufficientHourData)), 4);
  const Error e(ErrorCode::kDuplicateTime, "dup");
  EXPECT_EQ(e.category(), ErrorCategory::kData);
  EXPECT_EQ(to_string(ErrorCode::kDuplicateTime), "DuplicateTime");
}
