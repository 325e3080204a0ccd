#include "solarpp/censored_normal.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "solarpp/error.hpp"
#include "solarpp/normal.hpp"

namespace solarpp {
namespace {

const double kInvSqrtPi = 1.0 / std::sqrt(std::numbers::pi);

// Standardized CRPS pieces. With z = clamp(y, l, u) the score is
//   |y - z| + A(z) + B(u) - D(l)
// where A(z) = z(2Phi(z) - 1) + 2phi(z),
//       B(u) = u Q(u)^2 - 2 phi(u) Q(u) - Phi(sqrt2 u) / sqrt(pi),
//       D(l) = l Phi(l)^2 + 2 Phi(l) phi(l) - Phi(sqrt2 l) / sqrt(pi),
// and B'(u) = Q(u)^2, D'(l) = Phi(l)^2, A'(z) = 2Phi(z) - 1.
double upper_term(double u) {
  if (std::isinf(u)) return -kInvSqrtPi;
  const double q = normal::sf(u);
  return u * q * q - 2.0 * normal::pdf(u) * q - normal::cdf(std::numbers::sqrt2 * u) * kInvSqrtPi;
}

double lower_term(double l) {
  if (std::isinf(l)) return 0.0;
  const double p = normal::cdf(l);
  return l * p * p + 2.0 * p * normal::pdf(l) - normal::cdf(std::numbers::sqrt2 * l) * kInvSqrtPi;
}

struct Standardized {
  double y, l, u;
};

Standardized standardize(const CensoredNormal& d, double y) {
  return {(y - d.mu()) / d.sigma(), (d.lower() - d.mu()) / d.sigma(), (d.upper() - d.mu()) / d.sigma()};
}

double standardized_crps(const Standardized& s) {
  const double z = std::clamp(s.y, s.l, s.u);
  return std::abs(s.y - z) + z * (2.0 * normal::cdf(z) - 1.0) + 2.0 * normal::pdf(z) + upper_term(s.u) -
         lower_term(s.l);
}

}  // namespace

CensoredNormal::CensoredNormal(double mu, double sigma, double lower, double upper)
    : mu_(mu), sigma_(std::max(sigma, kMinScale)), lower_(lower), upper_(upper) {
  if (!(lower_ < upper_)) {
    throw Error(ErrorCode::kInvalidArgument, "censoring bounds require lower < upper");
  }
  if (std::isnan(mu_) || std::isnan(sigma)) {
    throw Error(ErrorCode::kInvalidArgument, "censored normal parameters must not be NaN");
  }
}

double cdf(const CensoredNormal& d, double z) {
  if (z < d.lower()) return 0.0;
  if (z >= d.upper()) return 1.0;
  return normal::cdf((z - d.mu()) / d.sigma());
}

double cdf_left(const CensoredNormal& d, double z) {
  if (z <= d.lower()) return 0.0;
  if (z > d.upper()) return 1.0;
  return normal::cdf((z - d.mu()) / d.sigma());
}

double quantile(const CensoredNormal& d, double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(ErrorCode::kInvalidProbability, "quantile level " + std::to_string(p));
  }
  return std::clamp(d.mu() + d.sigma() * normal::quantile(p), d.lower(), d.upper());
}

double mean(const CensoredNormal& d) {
  const double mu = d.mu();
  const double sigma = d.sigma();
  double result = 0.0;
  double p_lo = 0.0, pdf_lo = 0.0;
  if (!std::isinf(d.lower())) {
    const double alpha = (d.lower() - mu) / sigma;
    p_lo = normal::cdf(alpha);
    pdf_lo = normal::pdf(alpha);
    result += d.lower() * p_lo;
  }
  double p_hi = 1.0, pdf_hi = 0.0;
  if (d.has_upper()) {
    const double beta = (d.upper() - mu) / sigma;
    p_hi = normal::cdf(beta);
    pdf_hi = normal::pdf(beta);
    result += d.upper() * normal::sf(beta);
  }
  return result + mu * (p_hi - p_lo) + sigma * (pdf_lo - pdf_hi);
}

double crps(const CensoredNormal& d, double y) {
  return std::max(0.0, d.sigma() * standardized_crps(standardize(d, y)));
}

CrpsGradient crps_gradient(const CensoredNormal& d, double y) {
  const Standardized s = standardize(d, y);
  const double c = standardized_crps(s);

  double c_y;
  if (s.y < s.l) {
    c_y = -1.0;
  } else if (s.y > s.u) {
    c_y = 1.0;
  } else {
    c_y = 2.0 * normal::cdf(s.y) - 1.0;
  }

  double c_l = 0.0, l_term = 0.0;
  if (!std::isinf(s.l)) {
    const double p = normal::cdf(s.l);
    c_l = -p * p + (s.y < s.l ? 2.0 * p : 0.0);
    l_term = s.l * c_l;
  }
  double c_u = 0.0, u_term = 0.0;
  if (!std::isinf(s.u)) {
    const double q = normal::sf(s.u);
    c_u = q * q - (s.y > s.u ? 2.0 * q : 0.0);
    u_term = s.u * c_u;
  }

  return {d.sigma() * c, -(c_y + c_l + c_u), c - s.y * c_y - l_term - u_term};
}

double randomized_pit(const CensoredNormal& d, double y, double u) {
  const double left = cdf_left(d, y);
  return left + u * (cdf(d, y) - left);
}

EmpiricalEnsemble::EmpiricalEnsemble(std::span<const double> members)
    : sorted_(members.begin(), members.end()) {
  if (sorted_.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "an ensemble needs at least two members");
  }
  std::sort(sorted_.begin(), sorted_.end());
}

double crps_empirical(const EmpiricalEnsemble& e, double y) {
  const auto x = e.sorted();
  const double m = static_cast<double>(x.size());
  double abs_err = 0.0;
  double spread = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    abs_err += std::abs(x[i] - y);
    spread += (2.0 * static_cast<double>(i + 1) - m - 1.0) * x[i];
  }
  return std::max(0.0, abs_err / m - spread / (m * m));
}

}  // namespace solarpp
