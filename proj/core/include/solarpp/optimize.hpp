#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace solarpp::optim {

/// Returns f(x); fills `grad` when non-null.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd* grad)>;

struct Options {
  int max_iterations = 1000;
  double rel_tol = 1e-8;   // relative change of f between accepted iterates
  double grad_tol = 1e-10;  // infinity norm
};

struct Result {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Set when the method could not make progress (non-finite values or a
  /// failed line search away from a stationary point).
  bool failed = false;
  /// f at every accepted iterate, starting with f(x0).
  std::vector<double> trace;
};

/// BFGS with backtracking Armijo line search.
Result minimize_bfgs(const Objective& f, const Eigen::VectorXd& x0, const Options& options = {});

/// Derivative-free Nelder-Mead simplex search.
Result minimize_nelder_mead(const Objective& f, const Eigen::VectorXd& x0, const Options& options = {},
                            double initial_step = 0.5);

}  // namespace solarpp::optim
