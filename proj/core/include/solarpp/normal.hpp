#pragma once

#include <cmath>
#include <numbers>

namespace solarpp::normal {

inline double pdf(double x) {
  return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

/// Standard normal CDF via erfc, accurate in both tails.
inline double cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

/// Upper tail 1 - cdf(x) without cancellation.
inline double sf(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

/// Inverse CDF for p in (0, 1); +-infinity at the endpoints.
double quantile(double p);

}  // namespace solarpp::normal
