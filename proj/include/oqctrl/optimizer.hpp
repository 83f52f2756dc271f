#pragma once

#include <Eigen/Dense>
#include <functional>

namespace oqctrl {

struct BfgsOptions {
  int max_evals = 2000;
  double grad_tol = 1e-10;
  double fd_step_base = 1e-6;  // central-difference step: base * (1 + |x_i|)
  double stop_value = 1e-12;   // early exit once f falls at or below this
};

struct BfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evals = 0;
  bool converged = false;  // gradient criterion or stop_value reached
};

/// BFGS with central finite-difference gradients and a backtracking Armijo
/// line search. Deterministic; the evaluation budget covers gradient evals.
BfgsResult bfgs_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                         Eigen::VectorXd x0, const BfgsOptions& opt);

}  // namespace oqctrl
