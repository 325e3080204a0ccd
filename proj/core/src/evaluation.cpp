#include "solarpp/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "solarpp/error.hpp"
#include "solarpp/rng.hpp"

namespace solarpp::eval {
namespace {

using Json = nlohmann::json;

std::string num(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

Json aggregate_json(const Aggregate& a) {
  return Json{{"n", a.n}, {"crps", a.crps}, {"mae", a.mae}, {"bias", a.bias}, {"coverage", a.coverage},
              {"width", a.width}};
}

void check_index(const std::vector<TimePoint>& forecast_times, const ObservationSeries& obs) {
  if (forecast_times != obs.times) {
    throw Error(ErrorCode::kIndexMismatch, "forecast and observation time indices differ");
  }
}

double median_of_sorted(std::span<const double> x) {
  const std::size_t m = x.size();
  return m % 2 == 1 ? x[m / 2] : 0.5 * (x[m / 2 - 1] + x[m / 2]);
}

void finish(EvaluationReport& report) {
  report.overall = aggregate(report.rows);
  std::vector<ScoreRow> day;
  for (const auto& r : report.rows) {
    if (is_daytime(r.hour)) day.push_back(r);
  }
  report.daytime = aggregate(day);
  report.per_hour = hourly_breakdown(report.rows);
}

std::vector<std::size_t> build_histogram(const EvaluationReport& report, std::span<const ScoreRow> rows) {
  if (report.kind == ForecastKind::kEnsemble) {
    std::vector<std::size_t> h(report.histogram.size(), 0);
    for (const auto& r : rows) ++h[static_cast<std::size_t>(r.rank - 1)];
    return h;
  }
  std::vector<std::size_t> h(kPitBins, 0);
  for (const auto& r : rows) {
    const int bin = std::clamp(static_cast<int>(r.pit * kPitBins), 0, kPitBins - 1);
    ++h[static_cast<std::size_t>(bin)];
  }
  return h;
}

}  // namespace

double nominal_level(std::size_t members) {
  const double m = static_cast<double>(members);
  return (m - 1.0) / (m + 1.0);
}

bool is_daytime(int local_hour) { return local_hour >= kDaytimeFirstHour && local_hour <= kDaytimeLastHour; }

Aggregate aggregate(std::span<const ScoreRow> rows) {
  Aggregate a;
  a.n = rows.size();
  if (rows.empty()) return a;
  std::size_t covered = 0;
  for (const auto& r : rows) {
    a.crps += r.crps;
    a.mae += r.abs_err_median;
    a.bias += r.signed_err_mean;
    a.width += r.pi_upper - r.pi_lower;
    covered += r.covered ? 1 : 0;
  }
  const double n = static_cast<double>(rows.size());
  a.crps /= n;
  a.mae /= n;
  a.bias /= n;
  a.width /= n;
  a.coverage = 100.0 * static_cast<double>(covered) / n;
  return a;
}

std::array<std::optional<Aggregate>, 24> hourly_breakdown(std::span<const ScoreRow> rows) {
  std::array<std::vector<ScoreRow>, 24> groups;
  for (const auto& r : rows) groups.at(static_cast<std::size_t>(r.hour)).push_back(r);
  std::array<std::optional<Aggregate>, 24> out;
  for (int h = 0; h < 24; ++h) {
    if (!groups[h].empty()) out[h] = aggregate(groups[h]);
  }
  return out;
}

EvaluationReport score_distribution_forecasts(const DistributionForecasts& forecasts, const ObservationSeries& obs,
                                              int utc_offset, double nominal, std::uint64_t seed) {
  check_index(forecasts.times, obs);
  if (forecasts.forecasts.size() != forecasts.times.size()) {
    throw Error(ErrorCode::kIndexMismatch, "forecast count differs from time index length");
  }
  if (!(nominal > 0.0 && nominal < 1.0)) throw Error(ErrorCode::kInvalidProbability, "nominal level");
  EvaluationReport report;
  report.kind = ForecastKind::kDistribution;
  report.nominal = nominal;
  report.seed = seed;
  Rng rng(seed);
  const double p_lo = 0.5 * (1.0 - nominal);
  const double p_hi = 0.5 * (1.0 + nominal);
  report.rows.reserve(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const CensoredNormal& d = forecasts.forecasts[i];
    const double y = obs.values[i];
    ScoreRow row;
    row.time = obs.times[i];
    row.hour = local_hour(row.time, utc_offset);
    row.y = y;
    row.crps = crps(d, y);
    row.abs_err_median = std::abs(quantile(d, 0.5) - y);
    row.signed_err_mean = mean(d) - y;
    row.pit = randomized_pit(d, y, rng.uniform());
    row.pi_lower = quantile(d, p_lo);
    row.pi_upper = quantile(d, p_hi);
    row.covered = row.pi_lower <= y && y <= row.pi_upper;
    report.rows.push_back(row);
  }
  finish(report);
  report.histogram = build_histogram(report, report.rows);
  return report;
}

EvaluationReport score_ensemble_forecasts(const EnsembleSeries& forecasts, const ObservationSeries& obs,
                                          int utc_offset, std::uint64_t seed) {
  check_index(forecasts.times(), obs);
  EvaluationReport report;
  report.kind = ForecastKind::kEnsemble;
  report.nominal = nominal_level(forecasts.member_count());
  report.seed = seed;
  report.histogram.assign(forecasts.member_count() + 1, 0);
  Rng rng(seed);
  report.rows.reserve(obs.size());
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const EmpiricalEnsemble e(forecasts.members(i));
    const auto x = e.sorted();
    const double y = obs.values[i];
    ScoreRow row;
    row.time = obs.times[i];
    row.hour = local_hour(row.time, utc_offset);
    row.y = y;
    row.crps = crps_empirical(e, y);
    row.abs_err_median = std::abs(median_of_sorted(x) - y);
    double sum = 0.0;
    for (const double v : x) sum += v;
    row.signed_err_mean = sum / static_cast<double>(x.size()) - y;
    const auto below = static_cast<std::size_t>(std::lower_bound(x.begin(), x.end(), y) - x.begin());
    const auto ties = static_cast<std::size_t>(std::upper_bound(x.begin(), x.end(), y) - x.begin()) - below;
    row.rank = static_cast<int>(1 + below + rng.below(ties + 1));
    row.pi_lower = x.front();
    row.pi_upper = x.back();
    row.covered = row.pi_lower <= y && y <= row.pi_upper;
    report.rows.push_back(row);
  }
  finish(report);
  report.histogram = build_histogram(report, report.rows);
  return report;
}

double skill_summary(const EvaluationReport& candidate, const EvaluationReport& reference) {
  if (reference.overall.crps == 0.0) throw Error(ErrorCode::kZeroReference, "reference CRPS is zero");
  return 100.0 * (1.0 - candidate.overall.crps / reference.overall.crps);
}

std::vector<std::size_t> EvaluationReport::histogram_for_hour(int hour) const {
  std::vector<ScoreRow> subset;
  for (const auto& r : rows) {
    if (r.hour == hour) subset.push_back(r);
  }
  return build_histogram(*this, subset);
}

std::string EvaluationReport::to_json() const {
  Json j;
  j["kind"] = kind == ForecastKind::kDistribution ? "distribution" : "ensemble";
  j["nominal"] = nominal;
  j["seed"] = seed;
  j["aggregate"] = aggregate_json(overall);
  j["daytime"] = aggregate_json(daytime);
  Json hours = Json::array();
  for (int h = 0; h < 24; ++h) hours.push_back(per_hour[h] ? aggregate_json(*per_hour[h]) : Json(nullptr));
  j["per_hour"] = hours;
  j["histogram"] = histogram;
  return j.dump(2);
}

std::string EvaluationReport::per_hour_csv() const {
  std::ostringstream out;
  out << "hour,n,crps,mae,bias,coverage,width\n";
  for (int h = 0; h < 24; ++h) {
    out << h << ',';
    if (per_hour[h]) {
      const Aggregate& a = *per_hour[h];
      out << a.n << ',' << num(a.crps) << ',' << num(a.mae) << ',' << num(a.bias) << ',' << num(a.coverage) << ','
          << num(a.width) << '\n';
    } else {
      out << "0,,,,,\n";
    }
  }
  return out.str();
}

std::string EvaluationReport::histogram_csv() const {
  std::ostringstream out;
  if (kind == ForecastKind::kEnsemble) {
    out << "rank,count\n";
    for (std::size_t k = 0; k < histogram.size(); ++k) out << k + 1 << ',' << histogram[k] << '\n';
  } else {
    out << "bin_lower,bin_upper,count\n";
    for (std::size_t k = 0; k < histogram.size(); ++k) {
      out << num(static_cast<double>(k) / kPitBins) << ',' << num(static_cast<double>(k + 1) / kPitBins) << ','
          << histogram[k] << '\n';
    }
  }
  return out.str();
}

}  // namespace solarpp::eval
