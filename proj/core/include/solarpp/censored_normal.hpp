#pragma once

#include <limits>
#include <span>
#include <vector>

namespace solarpp {

/// Scale floor applied on construction.
inline constexpr double kMinScale = 1e-3;

/// Censoring interval of a forecast distribution. GHI uses [0, inf),
/// PV power uses [0, capacity].
struct CensoringBounds {
  double lower = 0.0;
  double upper = std::numeric_limits<double>::infinity();

  bool has_upper() const { return upper < std::numeric_limits<double>::infinity(); }
  friend bool operator==(const CensoringBounds&, const CensoringBounds&) = default;
};

/// Normal distribution censored to [lower, upper]: the mass below `lower`
/// sits as an atom at `lower`, the mass above `upper` as an atom at
/// `upper`. An infinite upper bound gives the left-censored case.
class CensoredNormal {
 public:
  static constexpr double kNoUpper = std::numeric_limits<double>::infinity();

  CensoredNormal(double mu, double sigma, double lower = 0.0, double upper = kNoUpper);
  CensoredNormal(double mu, double sigma, const CensoringBounds& bounds)
      : CensoredNormal(mu, sigma, bounds.lower, bounds.upper) {}

  double mu() const { return mu_; }
  double sigma() const { return sigma_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }
  bool has_upper() const { return upper_ < kNoUpper; }
  CensoringBounds bounds() const { return {lower_, upper_}; }

 private:
  double mu_;
  double sigma_;
  double lower_;
  double upper_;
};

/// Right-continuous CDF.
double cdf(const CensoredNormal& d, double z);
/// Left limit F(z-).
double cdf_left(const CensoredNormal& d, double z);

/// Generalized inverse of the CDF; throws Error(kInvalidProbability)
/// unless 0 < p < 1.
double quantile(const CensoredNormal& d, double p);

double mean(const CensoredNormal& d);

/// Closed-form CRPS.
double crps(const CensoredNormal& d, double y);

struct CrpsGradient {
  double value;
  double d_mu;
  double d_sigma;
};

/// CRPS together with its partial derivatives in mu and sigma.
CrpsGradient crps_gradient(const CensoredNormal& d, double y);

/// Randomized PIT F(y-) + u * (F(y) - F(y-)); `u` comes from the caller.
double randomized_pit(const CensoredNormal& d, double y, double u);

/// Sorted copy of m >= 2 ensemble members.
class EmpiricalEnsemble {
 public:
  explicit EmpiricalEnsemble(std::span<const double> members);

  std::span<const double> sorted() const { return sorted_; }
  std::size_t size() const { return sorted_.size(); }

 private:
  std::vector<double> sorted_;
};

/// CRPS of the empirical CDF: mean |x_i - y| - (1 / 2m^2) sum |x_i - x_j|.
double crps_empirical(const EmpiricalEnsemble& e, double y);

}  // namespace solarpp
