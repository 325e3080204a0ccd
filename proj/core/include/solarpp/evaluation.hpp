#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "solarpp/censored_normal.hpp"
#include "solarpp/ingest.hpp"
#include "solarpp/time.hpp"

namespace solarpp::eval {

inline constexpr int kPitBins = 20;
inline constexpr int kDaytimeFirstHour = 6;
inline constexpr int kDaytimeLastHour = 20;

/// Nominal level (m - 1) / (m + 1) of an m-member ensemble's range.
double nominal_level(std::size_t members);

bool is_daytime(int local_hour);

struct ScoreRow {
  TimePoint time{};
  int hour = 0;
  double y = 0.0;
  double crps = 0.0;
  double abs_err_median = 0.0;
  double signed_err_mean = 0.0;  // forecast mean minus observation
  double pit = 0.0;              // randomized PIT (distribution forecasts)
  int rank = 0;                  // 1..m+1 (ensemble forecasts), 0 otherwise
  double pi_lower = 0.0;
  double pi_upper = 0.0;
  bool covered = false;
};

struct Aggregate {
  std::size_t n = 0;
  double crps = 0.0;
  double mae = 0.0;
  double bias = 0.0;
  double coverage = 0.0;  // percent
  double width = 0.0;
};

/// Means over rows; coverage in percent.
Aggregate aggregate(std::span<const ScoreRow> rows);

/// Group-by local hour; hours without rows are empty.
std::array<std::optional<Aggregate>, 24> hourly_breakdown(std::span<const ScoreRow> rows);

enum class ForecastKind { kDistribution, kEnsemble };

struct EvaluationReport {
  ForecastKind kind = ForecastKind::kDistribution;
  double nominal = 0.0;
  std::uint64_t seed = 0;
  Aggregate overall;
  Aggregate daytime;
  std::array<std::optional<Aggregate>, 24> per_hour;
  /// 20 PIT bins, or m + 1 rank bins for ensembles.
  std::vector<std::size_t> histogram;
  std::vector<ScoreRow> rows;

  std::string to_json() const;
  std::string per_hour_csv() const;
  std::string histogram_csv() const;
  /// Histogram restricted to rows at one local hour.
  std::vector<std::size_t> histogram_for_hour(int hour) const;
};

struct DistributionForecasts {
  std::vector<TimePoint> times;
  std::vector<CensoredNormal> forecasts;
};

/// Scores parametric forecasts: closed-form CRPS, MAE of the median, bias
/// of the mean, central PI at `nominal`, randomized PIT from `seed`.
/// Throws Error(kIndexMismatch) if the time indices differ.
EvaluationReport score_distribution_forecasts(const DistributionForecasts& forecasts, const ObservationSeries& obs,
                                              int utc_offset, double nominal, std::uint64_t seed);

/// Scores raw ensembles: empirical CRPS, member median and mean, PI as the
/// member range, rank with uniformly randomized ties.
EvaluationReport score_ensemble_forecasts(const EnsembleSeries& forecasts, const ObservationSeries& obs,
                                          int utc_offset, std::uint64_t seed);

/// Relative CRPS improvement in percent: 100 (1 - cand / ref).
/// Throws Error(kZeroReference).
double skill_summary(const EvaluationReport& candidate, const EvaluationReport& reference);

}  // namespace solarpp::eval
