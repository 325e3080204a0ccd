#include "solarpp/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "solarpp/error.hpp"

namespace solarpp {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    if (!cell.empty() && cell.back() == '\r') cell.pop_back();
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

CsvTable read_csv(const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::kFileNotFound, path);
  }
  std::ifstream in(path);
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    if (first) {
      table.header = split_line(line);
      first = false;
    } else {
      table.rows.push_back(split_line(line));
    }
  }
  if (first) throw Error(ErrorCode::kMissingColumn, path + ": empty file, no header");
  return table;
}

std::size_t column_index(const CsvTable& table, std::string_view name, const std::string& path) {
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (table.header[i] == name) return i;
  }
  throw Error(ErrorCode::kMissingColumn, path + ": column '" + std::string(name) + "' not found");
}

double parse_cell(const std::vector<std::string>& row, std::size_t col, std::size_t row_number,
                  const std::string& column_name) {
  if (col >= row.size()) return kNaN;
  std::string_view s = row[col];
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s.empty() || s == "NA" || s == "NaN" || s == "nan") return kNaN;
  double value = 0.0;
  const char* begin = s.data();
  if (*begin == '+') ++begin;
  auto [ptr, ec] = std::from_chars(begin, s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::kNonNumericCell, "row " + std::to_string(row_number) + ", column '" +
                                                column_name + "': '" + std::string(s) + "'");
  }
  return value;
}

TimePoint parse_row_time(const std::vector<std::string>& row, std::size_t col, std::size_t row_number) {
  if (col >= row.size()) {
    throw Error(ErrorCode::kInvalidTime, "row " + std::to_string(row_number) + " has no time cell");
  }
  return parse_time(row[col]);
}

std::vector<std::size_t> sort_order(const std::vector<TimePoint>& times) {
  std::vector<std::size_t> order(times.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return times[a] < times[b]; });
  return order;
}

void check_strictly_increasing(const std::vector<TimePoint>& times) {
  for (std::size_t i = 1; i < times.size(); ++i) {
    if (times[i] == times[i - 1]) {
      throw Error(ErrorCode::kDuplicateTime, format_time(times[i]));
    }
    if (times[i] < times[i - 1]) {
      throw Error(ErrorCode::kInvalidTime, "times not increasing at " + format_time(times[i]));
    }
  }
}

std::string format_number(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::ofstream open_for_write(const std::string& path) {
  const auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kFileNotFound, "cannot open '" + path + "' for writing");
  return out;
}

}  // namespace

std::string_view to_string(Variable v) { return v == Variable::kGhi ? "ghi" : "pv"; }

EnsembleSeries::EnsembleSeries(Variable variable, std::vector<TimePoint> times, std::size_t member_count,
                               std::vector<double> members,
                               std::map<std::string, std::vector<double>> covariates)
    : variable_(variable),
      times_(std::move(times)),
      member_count_(member_count),
      members_(std::move(members)),
      covariates_(std::move(covariates)) {
  if (members_.size() != times_.size() * member_count_) {
    throw Error(ErrorCode::kInvalidArgument, "member matrix size does not match times x members");
  }
  for (const auto& [name, values] : covariates_) {
    if (values.size() != times_.size()) {
      throw Error(ErrorCode::kInvalidArgument, "covariate '" + name + "' length mismatch");
    }
  }
  check_strictly_increasing(times_);
  if (variable_ == Variable::kGhi) {
    for (std::size_t i = 0; i < members_.size(); ++i) {
      if (members_[i] < 0.0) {
        throw Error(ErrorCode::kNegativeGhi,
                    "member value " + format_number(members_[i]) + " at " +
                        format_time(times_[i / member_count_]));
      }
    }
  }
}

const std::vector<double>& EnsembleSeries::covariate(const std::string& name) const {
  const auto it = covariates_.find(name);
  if (it == covariates_.end()) throw Error(ErrorCode::kMissingCovariate, name);
  return it->second;
}

EnsembleSeries EnsembleSeries::select(std::span<const std::size_t> rows) const {
  std::vector<TimePoint> times;
  std::vector<double> members;
  times.reserve(rows.size());
  members.reserve(rows.size() * member_count_);
  std::map<std::string, std::vector<double>> covariates;
  for (const auto& [name, values] : covariates_) covariates[name].reserve(rows.size());
  for (const std::size_t r : rows) {
    times.push_back(times_[r]);
    const auto m = this->members(r);
    members.insert(members.end(), m.begin(), m.end());
    for (const auto& [name, values] : covariates_) covariates[name].push_back(values[r]);
  }
  return EnsembleSeries(variable_, std::move(times), member_count_, std::move(members),
                        std::move(covariates));
}

ObservationSeries ObservationSeries::select(std::span<const std::size_t> rows) const {
  ObservationSeries out{variable, {}, {}};
  out.times.reserve(rows.size());
  out.values.reserve(rows.size());
  for (const std::size_t r : rows) {
    out.times.push_back(times[r]);
    out.values.push_back(values[r]);
  }
  return out;
}

std::string EnsembleSchema::member_column(std::size_t index) const {
  const std::size_t width = std::max<std::size_t>(2, std::to_string(members).size());
  std::string digits = std::to_string(index + 1);
  return member_prefix + std::string(width - std::min(width, digits.size()), '0') + digits;
}

EnsembleSeries load_ensemble_csv(const std::string& path, const EnsembleSchema& schema, Variable variable) {
  const CsvTable table = read_csv(path);
  const std::size_t time_col = column_index(table, schema.time_column, path);
  std::vector<std::size_t> member_cols;
  for (std::size_t k = 0; k < schema.members; ++k) {
    member_cols.push_back(column_index(table, schema.member_column(k), path));
  }
  std::vector<std::size_t> cov_cols;
  for (const auto& name : schema.covariates) cov_cols.push_back(column_index(table, name, path));

  const std::size_t n = table.rows.size();
  std::vector<TimePoint> times(n);
  for (std::size_t i = 0; i < n; ++i) times[i] = parse_row_time(table.rows[i], time_col, i + 2);
  const auto order = sort_order(times);

  std::vector<TimePoint> sorted_times;
  std::vector<double> members;
  std::map<std::string, std::vector<double>> covariates;
  sorted_times.reserve(n);
  members.reserve(n * schema.members);
  for (const std::size_t i : order) {
    const auto& row = table.rows[i];
    sorted_times.push_back(times[i]);
    for (std::size_t k = 0; k < member_cols.size(); ++k) {
      members.push_back(parse_cell(row, member_cols[k], i + 2, schema.member_column(k)));
    }
    for (std::size_t c = 0; c < cov_cols.size(); ++c) {
      covariates[schema.covariates[c]].push_back(parse_cell(row, cov_cols[c], i + 2, schema.covariates[c]));
    }
  }
  return EnsembleSeries(variable, std::move(sorted_times), schema.members, std::move(members),
                        std::move(covariates));
}

ObservationSeries load_observation_csv(const std::string& path, Variable variable,
                                       std::string_view time_column, std::string_view value_column) {
  const CsvTable table = read_csv(path);
  const std::size_t time_col = column_index(table, time_column, path);
  const std::size_t value_col = column_index(table, value_column, path);
  const std::size_t n = table.rows.size();
  std::vector<TimePoint> times(n);
  for (std::size_t i = 0; i < n; ++i) times[i] = parse_row_time(table.rows[i], time_col, i + 2);
  const auto order = sort_order(times);

  ObservationSeries out{variable, {}, {}};
  out.times.reserve(n);
  out.values.reserve(n);
  for (const std::size_t i : order) {
    const double v = parse_cell(table.rows[i], value_col, i + 2, std::string(value_column));
    if (v < 0.0) {
      throw Error(variable == Variable::kGhi ? ErrorCode::kNegativeGhi : ErrorCode::kValueOutOfRange,
                  "negative observation at " + format_time(times[i]));
    }
    out.times.push_back(times[i]);
    out.values.push_back(v);
  }
  check_strictly_increasing(out.times);
  return out;
}

void write_ensemble_csv(const std::string& path, const EnsembleSeries& series, const EnsembleSchema& schema) {
  auto out = open_for_write(path);
  out << schema.time_column;
  for (std::size_t k = 0; k < series.member_count(); ++k) out << ',' << schema.member_column(k);
  for (const auto& name : schema.covariates) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_time(series.times()[i]);
    for (const double v : series.members(i)) out << ',' << format_number(v);
    for (const auto& name : schema.covariates) out << ',' << format_number(series.covariate(name)[i]);
    out << '\n';
  }
}

void write_observation_csv(const std::string& path, const ObservationSeries& series) {
  auto out = open_for_write(path);
  out << "time,value\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_time(series.times[i]) << ',' << format_number(series.values[i]) << '\n';
  }
}

StampConvention parse_convention(std::string_view text) {
  if (text == "hour-end") return StampConvention::kHourEnd;
  if (text == "mid-hour") return StampConvention::kMidHour;
  if (text == "hour-start") return StampConvention::kHourStart;
  throw Error(ErrorCode::kUnknownConvention, std::string(text));
}

ObservationSeries shift_stamp_to_hour_end(const ObservationSeries& series, StampConvention original_convention) {
  std::chrono::minutes shift{0};
  switch (original_convention) {
    case StampConvention::kHourEnd: shift = std::chrono::minutes{0}; break;
    case StampConvention::kMidHour: shift = std::chrono::minutes{30}; break;
    case StampConvention::kHourStart: shift = std::chrono::minutes{60}; break;
  }
  ObservationSeries out = series;
  for (auto& t : out.times) t += shift;
  return out;
}

bool Dataset::aligned() const {
  return ghi_forecast.times() == ghi_obs.times && ghi_obs.times == pv_obs.times;
}

Dataset join(const Dataset& ds, std::size_t* dropped_rows) {
  std::unordered_map<std::int64_t, std::size_t> ghi_index, pv_index;
  for (std::size_t i = 0; i < ds.ghi_obs.size(); ++i) {
    ghi_index.emplace(ds.ghi_obs.times[i].time_since_epoch().count(), i);
  }
  for (std::size_t i = 0; i < ds.pv_obs.size(); ++i) {
    pv_index.emplace(ds.pv_obs.times[i].time_since_epoch().count(), i);
  }

  std::set<std::int64_t> all_stamps;
  for (const auto t : ds.ghi_forecast.times()) all_stamps.insert(t.time_since_epoch().count());
  for (const auto t : ds.ghi_obs.times) all_stamps.insert(t.time_since_epoch().count());
  for (const auto t : ds.pv_obs.times) all_stamps.insert(t.time_since_epoch().count());

  std::vector<std::size_t> fc_rows, ghi_rows, pv_rows;
  for (std::size_t i = 0; i < ds.ghi_forecast.size(); ++i) {
    const TimePoint t = ds.ghi_forecast.times()[i];
    const auto g = ghi_index.find(t.time_since_epoch().count());
    const auto p = pv_index.find(t.time_since_epoch().count());
    if (g == ghi_index.end() || p == pv_index.end()) continue;
    if (!is_hour_aligned(t)) {
      throw Error(ErrorCode::kInvalidTime, "joined stamp " + format_time(t) +
                                               " is not on the hour; check stamp conventions");
    }
    bool complete = std::isfinite(ds.ghi_obs.values[g->second]) && std::isfinite(ds.pv_obs.values[p->second]);
    for (const double v : ds.ghi_forecast.members(i)) complete = complete && std::isfinite(v);
    for (const auto& [name, values] : ds.ghi_forecast.covariates()) complete = complete && std::isfinite(values[i]);
    if (!complete) continue;
    if (ds.pv_obs.values[p->second] > ds.site.capacity_mw + 1e-9) {
      throw Error(ErrorCode::kValueOutOfRange,
                  "PV observation above capacity at " + format_time(t));
    }
    fc_rows.push_back(i);
    ghi_rows.push_back(g->second);
    pv_rows.push_back(p->second);
  }
  if (dropped_rows != nullptr) *dropped_rows = all_stamps.size() - fc_rows.size();

  Dataset out;
  out.ghi_forecast = ds.ghi_forecast.select(fc_rows);
  out.ghi_obs = ds.ghi_obs.select(ghi_rows);
  out.pv_obs = ds.pv_obs.select(pv_rows);
  out.site = ds.site;
  return out;
}

SplitResult join_and_split(const Dataset& ds, std::chrono::sys_days train_end, int test_year) {
  using namespace std::chrono;
  const sys_days test_start{year{test_year} / January / 1};
  const sys_days test_stop{year{test_year + 1} / January / 1};
  if (train_end >= test_start) {
    throw Error(ErrorCode::kInvalidConfig, "train_end must precede the test year");
  }
  SplitResult result;
  const Dataset joined = join(ds, &result.dropped_rows);
  const TimePoint train_stop = TimePoint{train_end + days{1}};

  std::vector<std::size_t> train_rows, test_rows;
  for (std::size_t i = 0; i < joined.size(); ++i) {
    const TimePoint t = joined.ghi_forecast.times()[i];
    if (t < train_stop) {
      train_rows.push_back(i);
    } else if (t >= TimePoint{test_start} && t < TimePoint{test_stop}) {
      test_rows.push_back(i);
    }
  }
  if (train_rows.empty()) throw Error(ErrorCode::kEmptySplit, "train");
  if (test_rows.empty()) throw Error(ErrorCode::kEmptySplit, "test");

  auto take = [&](const std::vector<std::size_t>& rows) {
    Dataset d;
    d.ghi_forecast = joined.ghi_forecast.select(rows);
    d.ghi_obs = joined.ghi_obs.select(rows);
    d.pv_obs = joined.pv_obs.select(rows);
    d.site = joined.site;
    return d;
  };
  result.train = take(train_rows);
  result.test = take(test_rows);
  return result;
}

}  // namespace solarpp
