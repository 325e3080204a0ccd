#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "solarpp/censored_normal.hpp"
#include "solarpp/optimize.hpp"

namespace solarpp::emos {

struct EnsembleStats {
  double mean = 0.0;
  double variance = 0.0;  // (m - 1) denominator
};

/// Two-pass mean and sample variance; throws for m < 2.
EnsembleStats ensemble_stats(std::span<const double> members);

/// Link coefficients: mu = a + b * mean, sigma^2 = c + d * variance.
struct EmosCoefficients {
  double a = 0.0;
  double b = 1.0;
  double c = 1.0;
  double d = 1.0;

  friend bool operator==(const EmosCoefficients&, const EmosCoefficients&) = default;
};

/// Lower limit on the predicted variance (target units squared).
inline constexpr double kVarianceFloor = 1e-6;

struct Row {
  EnsembleStats stats;
  double y = 0.0;
  int hour = 0;  // local hour, used by the hourly variant only
};

CensoredNormal predict(const EmosCoefficients& coef, const EnsembleStats& stats, const CensoringBounds& bounds);

double mean_crps(std::span<const Row> rows, const EmosCoefficients& coef, const CensoringBounds& bounds);

struct FitOptions {
  EmosCoefficients init{};
  std::uint64_t seed = 0;
  std::size_t min_rows = 100;
  int random_restarts = 1;
  optim::Options optimizer{};
};

struct FitResult {
  EmosCoefficients coefficients;
  double train_crps = 0.0;
  /// All observations and all ensemble statistics identical: the fit is a
  /// near point mass at the observed value rather than an optimization.
  bool degenerate = false;
  bool converged = false;
  std::string method;  // "bfgs", "nelder-mead" or "degenerate"
  int iterations = 0;
  /// Mean train CRPS at accepted iterates of the winning start.
  std::vector<double> trace;
};

/// Minimum-CRPS estimation over (a, b, sqrt c, sqrt d). Throws
/// Error(kInvalidArgument) on too few rows and Error(kNonConvergence) when
/// neither BFGS nor the Nelder-Mead fallback converges.
FitResult fit_emos(std::span<const Row> rows, const CensoringBounds& bounds, const FitOptions& options = {});

enum class Mode { kGlobal, kHourly };

class EmosModel {
 public:
  EmosModel() = default;
  static EmosModel global(const EmosCoefficients& coef, const CensoringBounds& bounds);
  static EmosModel hourly(const std::array<EmosCoefficients, 24>& coef, const CensoringBounds& bounds);

  bool fitted() const { return fitted_; }
  Mode mode() const { return mode_; }
  const CensoringBounds& bounds() const { return bounds_; }
  /// Coefficients used for `hour` (the single set in global mode).
  const EmosCoefficients& coefficients(int hour = 0) const;

  /// Throws Error(kUnfittedModel) on a default-constructed model.
  CensoredNormal predict(const EnsembleStats& stats, int hour) const;

  std::string to_json() const;
  static EmosModel from_json(std::string_view text);

 private:
  bool fitted_ = false;
  Mode mode_ = Mode::kGlobal;
  CensoringBounds bounds_{};
  std::array<EmosCoefficients, 24> coef_{};
};

EmosModel fit_global(std::span<const Row> rows, const CensoringBounds& bounds, const FitOptions& options = {});

/// 24 independent fits on hour-filtered rows. Throws
/// Error(kInsufficientHourData) naming the first hour with fewer than
/// `min_rows_per_hour` rows.
EmosModel fit_hourly(std::span<const Row> rows, const CensoringBounds& bounds, const FitOptions& options = {},
                     std::size_t min_rows_per_hour = 30);

}  // namespace solarpp::emos
