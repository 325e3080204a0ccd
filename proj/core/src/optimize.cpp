#include "solarpp/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Dense>

namespace solarpp::optim {
namespace {

bool small_change(double before, double after, double rel_tol) {
  return std::abs(before - after) <= rel_tol * std::max(std::abs(before), 1e-300);
}

}  // namespace

Result minimize_bfgs(const Objective& f, const Eigen::VectorXd& x0, const Options& options) {
  const Eigen::Index n = x0.size();
  Result r;
  r.x = x0;
  Eigen::VectorXd g(n);
  r.value = f(r.x, &g);
  r.trace.push_back(r.value);
  if (!std::isfinite(r.value) || !g.allFinite()) {
    r.failed = true;
    return r;
  }

  Eigen::MatrixXd h_inv = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd g_new(n);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() <= options.grad_tol) {
      r.converged = true;
      return r;
    }
    Eigen::VectorXd dir = -h_inv * g;
    double slope = g.dot(dir);
    if (!(slope < 0.0)) {
      h_inv.setIdentity();
      dir = -g;
      slope = -g.squaredNorm();
    }

    double step = 1.0;
    double f_new = 0.0;
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = r.x + step * dir;
      f_new = f(x_new, &g_new);
      if (std::isfinite(f_new) && g_new.allFinite() && f_new <= r.value + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      // No decrease along a descent direction: either at the optimum up to
      // round-off, or the objective is ill-behaved here.
      r.converged = g.lpNorm<Eigen::Infinity>() <= 1e-6 * std::max(1.0, std::abs(r.value));
      r.failed = !r.converged;
      return r;
    }

    const Eigen::VectorXd s = x_new - r.x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (iter == 0 && sy > 0.0) {
      h_inv *= sy / y.squaredNorm();
    }
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
      h_inv = (I - rho * s * y.transpose()) * h_inv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }

    const double f_old = r.value;
    r.x = x_new;
    r.value = f_new;
    g = g_new;
    r.iterations = iter + 1;
    r.trace.push_back(f_new);
    if (small_change(f_old, f_new, options.rel_tol)) {
      r.converged = true;
      return r;
    }
  }
  return r;
}

Result minimize_nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const Options& options,
                            double initial_step) {
  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> simplex(n + 1, x0);
  std::vector<double> values(n + 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    simplex[i + 1][i] += initial_step * std::max(1.0, std::abs(x0[i]));
  }
  auto eval = [&](const Eigen::VectorXd& x) {
    const double v = f(x, nullptr);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  for (Eigen::Index i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

  Result r;
  std::vector<std::size_t> order(n + 1);
  auto sort_simplex = [&] {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    std::vector<Eigen::VectorXd> s2;
    std::vector<double> v2;
    for (auto i : order) {
      s2.push_back(simplex[i]);
      v2.push_back(values[i]);
    }
    simplex = std::move(s2);
    values = std::move(v2);
  };
  sort_simplex();
  r.trace.push_back(values[0]);

  for (int iter = 0; iter < options.max_iterations; ++iter) {
    r.iterations = iter + 1;
    if (std::isfinite(values[n]) && small_change(values[n], values[0], options.rel_tol)) {
      r.converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) centroid += simplex[i];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd reflected = centroid + (centroid - simplex[n]);
    const double f_r = eval(reflected);
    if (f_r < values[0]) {
      const Eigen::VectorXd expanded = centroid + 2.0 * (centroid - simplex[n]);
      const double f_e = eval(expanded);
      if (f_e < f_r) {
        simplex[n] = expanded;
        values[n] = f_e;
      } else {
        simplex[n] = reflected;
        values[n] = f_r;
      }
    } else if (f_r < values[n - 1]) {
      simplex[n] = reflected;
      values[n] = f_r;
    } else {
      const bool outside = f_r < values[n];
      const Eigen::VectorXd contracted =
          outside ? Eigen::VectorXd(centroid + 0.5 * (reflected - centroid))
                  : Eigen::VectorXd(centroid + 0.5 * (simplex[n] - centroid));
      const double f_c = eval(contracted);
      if (f_c < (outside ? f_r : values[n])) {
        simplex[n] = contracted;
        values[n] = f_c;
      } else {
        for (Eigen::Index i = 1; i <= n; ++i) {
          simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
          values[i] = eval(simplex[i]);
        }
      }
    }
    sort_simplex();
    if (values[0] < r.trace.back()) r.trace.push_back(values[0]);
  }
  r.x = simplex[0];
  r.value = values[0];
  r.failed = !std::isfinite(r.value);
  return r;
}

}  // namespace solarpp::optim
