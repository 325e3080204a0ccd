#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "solarpp/site.hpp"
#include "solarpp/time.hpp"

namespace solarpp {

enum class Variable { kGhi, kPvPower };

std::string_view to_string(Variable v);

/// Time-indexed m-member forecasts of one variable plus deterministic
/// covariates. Missing cells are stored as NaN and removed by the join.
class EnsembleSeries {
 public:
  EnsembleSeries() = default;

  /// `members` is row-major, times.size() x member_count. Validates that
  /// times are strictly increasing and GHI members are non-negative.
  EnsembleSeries(Variable variable, std::vector<TimePoint> times, std::size_t member_count,
                 std::vector<double> members, std::map<std::string, std::vector<double>> covariates);

  Variable variable() const { return variable_; }
  std::size_t size() const { return times_.size(); }
  std::size_t member_count() const { return member_count_; }
  const std::vector<TimePoint>& times() const { return times_; }
  std::span<const double> members(std::size_t row) const {
    return {members_.data() + row * member_count_, member_count_};
  }
  const std::vector<double>& member_data() const { return members_; }
  const std::map<std::string, std::vector<double>>& covariates() const { return covariates_; }
  bool has_covariate(const std::string& name) const { return covariates_.count(name) != 0; }
  /// Throws Error(kMissingCovariate).
  const std::vector<double>& covariate(const std::string& name) const;

  /// Rows at the given increasing indices.
  EnsembleSeries select(std::span<const std::size_t> rows) const;

 private:
  Variable variable_ = Variable::kGhi;
  std::vector<TimePoint> times_;
  std::size_t member_count_ = 0;
  std::vector<double> members_;
  std::map<std::string, std::vector<double>> covariates_;
};

struct ObservationSeries {
  Variable variable = Variable::kGhi;
  std::vector<TimePoint> times;
  std::vector<double> values;

  std::size_t size() const { return times.size(); }
  ObservationSeries select(std::span<const std::size_t> rows) const;
};

/// Column layout of an ensemble CSV: time, <prefix>01..<prefix>NN, covariates.
struct EnsembleSchema {
  std::string time_column = "time";
  std::string member_prefix = "member_";
  std::size_t members = 50;
  std::vector<std::string> covariates = {"t2m", "wind10m"};

  std::string member_column(std::size_t index) const;  // 0-based index
};

/// Loads an ensemble CSV. Rows are sorted by time; duplicate stamps,
/// missing columns, unparseable cells and negative GHI members throw.
EnsembleSeries load_ensemble_csv(const std::string& path, const EnsembleSchema& schema,
                                 Variable variable = Variable::kGhi);

/// Loads a `time,value` observation CSV. Values must be non-negative.
ObservationSeries load_observation_csv(const std::string& path, Variable variable,
                                       std::string_view time_column = "time",
                                       std::string_view value_column = "value");

void write_ensemble_csv(const std::string& path, const EnsembleSeries& series,
                        const EnsembleSchema& schema);
void write_observation_csv(const std::string& path, const ObservationSeries& series);

/// Time stamp convention of a raw source.
enum class StampConvention { kHourEnd, kMidHour, kHourStart };

/// Accepts "hour-end", "mid-hour", "hour-start"; throws Error(kUnknownConvention).
StampConvention parse_convention(std::string_view text);

/// Moves every stamp to the end of its averaging window (+0, +30 or +60
/// minutes). This is a pure shift: passing an already hour-end series with
/// a non-zero convention shifts it again.
ObservationSeries shift_stamp_to_hour_end(const ObservationSeries& series,
                                          StampConvention original_convention);

struct Dataset {
  EnsembleSeries ghi_forecast;
  ObservationSeries ghi_obs;
  ObservationSeries pv_obs;
  PlantSpec site;

  std::size_t size() const { return ghi_forecast.size(); }
  /// True when all three series share one time index.
  bool aligned() const;
};

struct SplitResult {
  Dataset train;
  Dataset test;
  /// Stamps present in at least one series but dropped because another
  /// series lacks them or holds a missing value there.
  std::size_t dropped_rows = 0;
};

/// Inner-joins the three series on time, drops incomplete rows, and splits
/// into train (stamps up to the end of `train_end`) and test (calendar
/// `test_year`, UTC). Throws Error(kEmptySplit) when a side is empty.
SplitResult join_and_split(const Dataset& ds, std::chrono::sys_days train_end, int test_year);

/// Joined, complete rows without splitting.
Dataset join(const Dataset& ds, std::size_t* dropped_rows = nullptr);

}  // namespace solarpp
