#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace oracle {

double phi_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double phi_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double phi_quantile(double p) {
  double lo = -40.0, hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (phi_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double censored_cdf(double mu, double sigma, double lower, double upper, double z) {
  if (z < lower) return 0.0;
  if (z >= upper) return 1.0;
  return phi_cdf((z - mu) / sigma);
}

namespace {

double integrate(const std::function<double(double)>& f, double a, double b) {
  if (!(a < b)) return 0.0;
  double error = 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 12, 1e-11, &error);
}

}  // namespace

double crps_quadrature(double mu, double sigma, double lower, double upper, double y) {
  // Outside [lower, upper) F is 0 or 1, so those pieces integrate to
  // the distance between y and the bound.
  double total = 0.0;
  if (y < lower) total += lower - y;
  if (y > upper) total += y - upper;

  // Integrate on [lower, upper) where F is smooth, split at y and at mu.
  // With an open side, F is 0 (or 1) to machine precision beyond 40 sigma;
  // the window still has to reach y so the step part is counted.
  const double lo = std::isinf(lower) ? std::min(mu - 40.0 * sigma, y) : lower;
  const double hi = std::max(lo, std::isinf(upper) ? std::max(mu + 40.0 * sigma, y) : upper);
  std::vector<double> cuts{lo, hi};
  for (double c : {y, mu - 8.0 * sigma, mu, mu + 8.0 * sigma}) {
    if (c > lo && c < hi) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    const bool above_y = 0.5 * (a + b) >= y;
    total += integrate(
        [&](double z) {
          const double f = phi_cdf((z - mu) / sigma) - (above_y ? 1.0 : 0.0);
          return f * f;
        },
        a, b);
  }
  return total;
}

double crps_empirical_integral(std::span<const double> members, double y) {
  std::vector<double> pts(members.begin(), members.end());
  pts.push_back(y);
  std::sort(pts.begin(), pts.end());
  const double m = static_cast<double>(members.size());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double a = pts[i], b = pts[i + 1];
    if (!(b > a)) continue;
    const double z = 0.5 * (a + b);
    const double f = static_cast<double>(std::count_if(members.begin(), members.end(), [&](double x) { return x <= z; })) / m;
    const double h = y <= z ? 1.0 : 0.0;
    total += (f - h) * (f - h) * (b - a);
  }
  return total;
}

double censored_mean_mc(double mu, double sigma, double lower, double upper, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(mu, sigma);
  long double sum = 0.0L;
  for (std::size_t i = 0; i < n; ++i) sum += std::clamp(normal(gen), lower, upper);
  return static_cast<double>(sum / static_cast<long double>(n));
}

double central_difference(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

std::array<double, 2> mlp_forward(const solarpp::nn::Mlp& net, solarpp::nn::Head head,
                                  const solarpp::nn::Features& scaled, int hour) {
  std::vector<double> in(scaled.begin(), scaled.end());
  if (net.embedding.size() != 0) {
    for (Eigen::Index k = 0; k < net.embedding.rows(); ++k) in.push_back(net.embedding(k, hour));
  }
  auto dense = [](const Eigen::MatrixXd& w, const Eigen::VectorXd& b, const std::vector<double>& x, bool relu) {
    std::vector<double> out(static_cast<std::size_t>(w.rows()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      double s = b(r);
      for (Eigen::Index c = 0; c < w.cols(); ++c) s += w(r, c) * x[static_cast<std::size_t>(c)];
      out[static_cast<std::size_t>(r)] = relu ? std::max(s, 0.0) : s;
    }
    return out;
  };
  const auto h1 = dense(net.w1, net.b1, in, true);
  const auto h2 = dense(net.w2, net.b2, h1, true);
  const auto o = dense(net.w3, net.b3, h2, false);
  const double raw = o[1];
  const double sigma = head == solarpp::nn::Head::kSoftplus ? std::log(1.0 + std::exp(raw)) : std::max(raw, 0.0) + 1e-3;
  return {o[0], sigma};
}

double chain_power_trace(double ghi, double temp_air, double wind, double zenith_deg, double azimuth_deg,
                         double extraterrestrial_dni, double latitude, double tilt_deg, double surface_azimuth_deg,
                         double albedo, double capacity_mw, double gamma) {
  (void)latitude;
  const double rad = std::numbers::pi / 180.0;
  const double cz = std::cos(zenith_deg * rad);
  if (ghi <= 0.0) return 0.0;
  // Erbs
  const double ext_h = extraterrestrial_dni * std::max(cz, 0.0);
  const double kt = ext_h > 0.0 ? std::clamp(ghi / ext_h, 0.0, 1.0) : 0.0;
  double df;
  if (kt <= 0.22) {
    df = 1.0 - 0.09 * kt;
  } else if (kt <= 0.80) {
    df = 0.9511 - 0.1604 * kt + 4.388 * kt * kt - 16.638 * kt * kt * kt + 12.336 * kt * kt * kt * kt;
  } else {
    df = 0.165;
  }
  double dhi, dni;
  if (zenith_deg >= 90.0) {
    dni = 0.0;
    dhi = ghi;
  } else {
    const double cz_c = std::max(cz, std::cos(87.0 * rad));
    dni = std::clamp((ghi - df * ghi) / cz_c, 0.0, extraterrestrial_dni);
    dhi = std::max(ghi - dni * cz_c, 0.0);
  }
  // Reindl
  const double tilt = tilt_deg * rad;
  const double cos_aoi = cz * std::cos(tilt) + std::sin(zenith_deg * rad) * std::sin(tilt) *
                                                    std::cos((azimuth_deg - surface_azimuth_deg) * rad);
  const double beam = dni * std::max(cos_aoi, 0.0);
  const double ai = extraterrestrial_dni > 0.0 ? std::clamp(dni / extraterrestrial_dni, 0.0, 1.0) : 0.0;
  const double rb = cz > 0.0 ? std::max(cos_aoi, 0.0) / std::max(cz, std::cos(87.0 * rad)) : 0.0;
  const double f = ghi > 0.0 ? std::sqrt(dni * std::max(cz, 0.0) / ghi) : 0.0;
  const double s3 = std::pow(std::sin(tilt / 2.0), 3);
  const double sky = dhi * (ai * rb + (1.0 - ai) * 0.5 * (1.0 + std::cos(tilt)) * (1.0 + f * s3));
  const double ground = ghi * albedo * 0.5 * (1.0 - std::cos(tilt));
  const double poa = std::max(beam + sky + ground, 0.0);
  // Sandia
  const double t_cell = poa * std::exp(-3.56 - 0.075 * wind) + temp_air + poa / 1000.0 * 3.0;
  // PVWatts
  return std::clamp(capacity_mw * poa / 1000.0 * (1.0 + gamma * (t_cell - 25.0)), 0.0, capacity_mw);
}

std::vector<SyntheticRow> emos_rows(std::size_t n, double a, double b, double c, double d, double lower,
                                    double upper, std::uint64_t seed, double mean_lo, double mean_hi,
                                    double var_max) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> um(mean_lo, mean_hi), uv(0.0, var_max);
  std::normal_distribution<double> z(0.0, 1.0);
  std::vector<SyntheticRow> rows(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = rows[i];
    r.mean = um(gen);
    r.variance = uv(gen);
    r.y = std::clamp(a + b * r.mean + std::sqrt(c + d * r.variance) * z(gen), lower, upper);
    r.hour = static_cast<int>(i % 24);
  }
  return rows;
}

}  // namespace oracle
