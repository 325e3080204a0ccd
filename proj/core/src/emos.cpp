#include "solarpp/emos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <json.hpp>

#include "solarpp/error.hpp"
#include "solarpp/rng.hpp"

namespace solarpp::emos {
namespace {

using Json = nlohmann::json;

double predicted_sigma(const EmosCoefficients& coef, double variance) {
  return std::sqrt(std::max(coef.c + coef.d * variance, kVarianceFloor));
}

// The optimizer works on theta = (a / s, b, sqrt(c) / s, sqrt(d)) where s
// is a data scale, so that all four unknowns are O(1) for GHI and PV alike.
struct Problem {
  std::span<const Row> rows;
  CensoringBounds bounds;
  double scale;

  EmosCoefficients coefficients(const Eigen::VectorXd& theta) const {
    return {theta[0] * scale, theta[1], theta[2] * theta[2] * scale * scale, theta[3] * theta[3]};
  }

  Eigen::VectorXd theta(const EmosCoefficients& coef) const {
    Eigen::VectorXd t(4);
    t << coef.a / scale, coef.b, std::sqrt(std::max(coef.c, 0.0)) / scale, std::sqrt(std::max(coef.d, 0.0));
    return t;
  }

  // Mean CRPS divided by the scale, with gradient in theta.
  double operator()(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
    const EmosCoefficients coef = coefficients(theta);
    double total = 0.0;
    Eigen::Vector4d g = Eigen::Vector4d::Zero();
    for (const Row& row : rows) {
      const double mu = coef.a + coef.b * row.stats.mean;
      const double var = coef.c + coef.d * row.stats.variance;
      const bool floored = var < kVarianceFloor;
      const double sigma = std::sqrt(floored ? kVarianceFloor : var);
      const CensoredNormal dist(mu, sigma, bounds);
      if (grad == nullptr) {
        total += crps(dist, row.y);
        continue;
      }
      const CrpsGradient cg = crps_gradient(dist, row.y);
      total += cg.value;
      g[0] += cg.d_mu * scale;
      g[1] += cg.d_mu * row.stats.mean;
      if (!floored) {
        // d sigma / d gamma = c'(gamma) / (2 sigma) with c = gamma^2 s^2.
        g[2] += cg.d_sigma * theta[2] * scale * scale / sigma;
        g[3] += cg.d_sigma * theta[3] * row.stats.variance / sigma;
      }
    }
    const double norm = static_cast<double>(rows.size()) * scale;
    if (grad != nullptr) *grad = g / norm;
    return total / norm;
  }
};

double data_scale(std::span<const Row> rows) {
  double sum = 0.0, sum_sq = 0.0;
  for (const Row& r : rows) {
    sum += r.y;
    sum_sq += r.y * r.y;
  }
  const double n = static_cast<double>(rows.size());
  const double var = std::max(sum_sq / n - (sum / n) * (sum / n), 0.0);
  const double sd = std::sqrt(var);
  return sd > 1e-9 ? sd : 1.0;
}

bool is_degenerate(std::span<const Row> rows) {
  const Row& first = rows.front();
  return std::all_of(rows.begin(), rows.end(), [&](const Row& r) {
    return r.y == first.y && r.stats.mean == first.stats.mean && r.stats.variance == first.stats.variance;
  });
}

EmosCoefficients degenerate_coefficients(double y, const CensoringBounds& bounds) {
  // Point mass at y; at a censoring bound, push the location ten minimum
  // scales past it so the atom carries essentially all the mass.
  const double offset = 10.0 * std::sqrt(kVarianceFloor);
  double a = y;
  if (y <= bounds.lower) a = bounds.lower - offset;
  if (bounds.has_upper() && y >= bounds.upper) a = bounds.upper + offset;
  return {a, 0.0, 0.0, 0.0};
}

Json bounds_json(const CensoringBounds& b) {
  Json j;
  j["lower"] = b.lower;
  j["upper"] = b.has_upper() ? Json(b.upper) : Json(nullptr);
  return j;
}

Json coef_json(const EmosCoefficients& c) { return Json{{"a", c.a}, {"b", c.b}, {"c", c.c}, {"d", c.d}}; }

EmosCoefficients coef_from_json(const Json& j) {
  return {j.at("a").get<double>(), j.at("b").get<double>(), j.at("c").get<double>(), j.at("d").get<double>()};
}

}  // namespace

EnsembleStats ensemble_stats(std::span<const double> members) {
  if (members.size() < 2) throw Error(ErrorCode::kInvalidArgument, "ensemble statistics need m >= 2");
  double sum = 0.0;
  for (const double x : members) sum += x;
  const double mean = sum / static_cast<double>(members.size());
  double ss = 0.0;
  for (const double x : members) ss += (x - mean) * (x - mean);
  return {mean, ss / static_cast<double>(members.size() - 1)};
}

CensoredNormal predict(const EmosCoefficients& coef, const EnsembleStats& stats, const CensoringBounds& bounds) {
  return CensoredNormal(coef.a + coef.b * stats.mean, predicted_sigma(coef, stats.variance), bounds);
}

double mean_crps(std::span<const Row> rows, const EmosCoefficients& coef, const CensoringBounds& bounds) {
  double total = 0.0;
  for (const Row& r : rows) total += crps(predict(coef, r.stats, bounds), r.y);
  return rows.empty() ? 0.0 : total / static_cast<double>(rows.size());
}

FitResult fit_emos(std::span<const Row> rows, const CensoringBounds& bounds, const FitOptions& options) {
  if (rows.size() < options.min_rows || rows.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "EMOS fit needs at least " + std::to_string(options.min_rows) + " rows, got " +
                    std::to_string(rows.size()));
  }
  FitResult best;
  if (is_degenerate(rows)) {
    best.coefficients = degenerate_coefficients(rows.front().y, bounds);
    best.train_crps = mean_crps(rows, best.coefficients, bounds);
    best.degenerate = true;
    best.converged = true;
    best.method = "degenerate";
    best.trace = {best.train_crps};
    return best;
  }

  const Problem problem{rows, bounds, data_scale(rows)};
  const optim::Objective objective = [&problem](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    return problem(x, g);
  };

  std::vector<Eigen::VectorXd> starts{problem.theta(options.init)};
  Rng rng(options.seed);
  for (int r = 0; r < options.random_restarts; ++r) {
    Eigen::VectorXd t = starts.front();
    t[0] += rng.normal();
    t[1] += 0.5 * rng.normal();
    t[2] = std::abs(t[2] + 0.5 * rng.normal()) + 0.05;
    t[3] = std::abs(t[3] + 0.5 * rng.normal()) + 0.05;
    starts.push_back(t);
  }

  bool any_converged = false;
  double best_value = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    optim::Result res = optim::minimize_bfgs(objective, start, options.optimizer);
    std::string method = "bfgs";
    if (res.failed || !res.converged) {
      optim::Result nm = optim::minimize_nelder_mead(objective, res.failed ? start : res.x, options.optimizer);
      if (nm.value <= res.value || res.failed) {
        if (!res.failed) {
          // Keep the trace monotone across the hand-over.
          nm.trace.insert(nm.trace.begin(), res.trace.begin(), res.trace.end());
        }
        res = std::move(nm);
        method = "nelder-mead";
      }
    }
    if (!std::isfinite(res.value)) continue;
    any_converged = any_converged || res.converged;
    if (res.value < best_value) {
      best_value = res.value;
      best.coefficients = problem.coefficients(res.x);
      best.converged = res.converged;
      best.method = method;
      best.iterations = res.iterations;
      best.trace.clear();
      for (const double v : res.trace) best.trace.push_back(v * problem.scale);
    }
  }
  if (!std::isfinite(best_value) || !any_converged) {
    throw Error(ErrorCode::kNonConvergence, "EMOS optimization did not converge within " +
                                                std::to_string(options.optimizer.max_iterations) + " iterations");
  }

  best.train_crps = mean_crps(rows, best.coefficients, bounds);
  // Never worse than the raw-ensemble-trusting start or the identity link.
  for (const EmosCoefficients& fallback : {options.init, EmosCoefficients{0.0, 1.0, 0.0, 1.0}}) {
    const double value = mean_crps(rows, fallback, bounds);
    if (value < best.train_crps) {
      best.coefficients = fallback;
      best.train_crps = value;
    }
  }
  return best;
}

EmosModel EmosModel::global(const EmosCoefficients& coef, const CensoringBounds& bounds) {
  EmosModel m;
  m.fitted_ = true;
  m.mode_ = Mode::kGlobal;
  m.bounds_ = bounds;
  m.coef_.fill(coef);
  return m;
}

EmosModel EmosModel::hourly(const std::array<EmosCoefficients, 24>& coef, const CensoringBounds& bounds) {
  EmosModel m;
  m.fitted_ = true;
  m.mode_ = Mode::kHourly;
  m.bounds_ = bounds;
  m.coef_ = coef;
  return m;
}

const EmosCoefficients& EmosModel::coefficients(int hour) const {
  if (!fitted_) throw Error(ErrorCode::kUnfittedModel, "EMOS model has not been fitted");
  return coef_.at(mode_ == Mode::kGlobal ? 0 : static_cast<std::size_t>(hour));
}

CensoredNormal EmosModel::predict(const EnsembleStats& stats, int hour) const {
  return emos::predict(coefficients(hour), stats, bounds_);
}

std::string EmosModel::to_json() const {
  if (!fitted_) throw Error(ErrorCode::kUnfittedModel, "cannot serialize an unfitted EMOS model");
  Json j;
  j["mode"] = mode_ == Mode::kGlobal ? "global" : "hourly";
  j["bounds"] = bounds_json(bounds_);
  if (mode_ == Mode::kGlobal) {
    j["coefficients"] = coef_json(coef_[0]);
  } else {
    Json per_hour = Json::object();
    for (int h = 0; h < 24; ++h) per_hour[std::to_string(h)] = coef_json(coef_[h]);
    j["coefficients"] = per_hour;
  }
  return j.dump(2);
}

EmosModel EmosModel::from_json(std::string_view text) {
  try {
    const Json j = Json::parse(text);
    CensoringBounds bounds;
    bounds.lower = j.at("bounds").at("lower").get<double>();
    if (!j.at("bounds").at("upper").is_null()) bounds.upper = j.at("bounds").at("upper").get<double>();
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "global") return global(coef_from_json(j.at("coefficients")), bounds);
    if (mode != "hourly") throw Error(ErrorCode::kSerialization, "unknown EMOS mode '" + mode + "'");
    std::array<EmosCoefficients, 24> coef{};
    for (int h = 0; h < 24; ++h) coef[h] = coef_from_json(j.at("coefficients").at(std::to_string(h)));
    return hourly(coef, bounds);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kSerialization, e.what());
  }
}

EmosModel fit_global(std::span<const Row> rows, const CensoringBounds& bounds, const FitOptions& options) {
  return EmosModel::global(fit_emos(rows, bounds, options).coefficients, bounds);
}

EmosModel fit_hourly(std::span<const Row> rows, const CensoringBounds& bounds, const FitOptions& options,
                     std::size_t min_rows_per_hour) {
  std::array<std::vector<Row>, 24> by_hour;
  for (const Row& r : rows) {
    if (r.hour < 0 || r.hour > 23) throw Error(ErrorCode::kInvalidArgument, "hour out of range");
    by_hour[r.hour].push_back(r);
  }
  for (int h = 0; h < 24; ++h) {
    if (by_hour[h].size() < min_rows_per_hour) {
      throw Error(ErrorCode::kInsufficientHourData,
                  "hour " + std::to_string(h) + " has " + std::to_string(by_hour[h].size()) + " rows");
    }
  }
  FitOptions hour_options = options;
  hour_options.min_rows = std::min(options.min_rows, min_rows_per_hour);
  std::array<EmosCoefficients, 24> coef{};
  for (int h = 0; h < 24; ++h) coef[h] = fit_emos(by_hour[h], bounds, hour_options).coefficients;
  return EmosModel::hourly(coef, bounds);
}

}  // namespace solarpp::emos
