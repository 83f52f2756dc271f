#include "oqctrl/optimizer.hpp"

#include <cmath>

namespace oqctrl {

BfgsResult bfgs_minimize(const std::function<double(const Eigen::VectorXd&)>& f,
                         Eigen::VectorXd x0, const BfgsOptions& opt) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  const int n = static_cast<int>(x0.size());
  BfgsResult res;
  res.x = x0;
  int evals = 0;
  auto eval = [&](const VectorXd& x) {
    ++evals;
    return f(x);
  };

  double fx = eval(res.x);
  res.value = fx;
  if (fx <= opt.stop_value) {
    res.evals = evals;
    res.converged = true;
    return res;
  }

  auto gradient = [&](const VectorXd& x, VectorXd& g) {
    VectorXd xp = x;
    for (int i = 0; i < n; ++i) {
      const double h = opt.fd_step_base * (1.0 + std::abs(x(i)));
      xp(i) = x(i) + h;
      const double fp = eval(xp);
      xp(i) = x(i) - h;
      const double fm = eval(xp);
      xp(i) = x(i);
      g(i) = (fp - fm) / (2.0 * h);
    }
  };

  MatrixXd hinv = MatrixXd::Identity(n, n);
  VectorXd g(n), g_new(n);
  gradient(res.x, g);
  bool first = true;

  while (evals < opt.max_evals) {
    if (g.lpNorm<Eigen::Infinity>() <= opt.grad_tol * (1.0 + std::abs(fx))) {
      res.converged = true;
      break;
    }
    VectorXd p = -(hinv * g);
    double slope = g.dot(p);
    if (slope >= 0.0) {  // not a descent direction, reset curvature model
      hinv.setIdentity();
      p = -g;
      slope = g.dot(p);
    }
    // Keep trial points within a sane move of the current iterate.
    const double max_move = 100.0 * (1.0 + res.x.lpNorm<Eigen::Infinity>());
    const double pnorm = p.lpNorm<Eigen::Infinity>();
    if (pnorm > max_move) {
      p *= max_move / pnorm;
      slope = g.dot(p);
    }

    // Backtracking Armijo search.
    double step = 1.0;
    double f_new = fx;
    VectorXd x_new = res.x;
    bool accepted = false;
    for (int ls = 0; ls < 40 && evals < opt.max_evals; ++ls) {
      x_new = res.x + step * p;
      f_new = eval(x_new);
      if (f_new <= fx + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    if (evals + 2 * n > opt.max_evals) {  // no budget left for a gradient
      res.x = x_new;
      fx = f_new;
      break;
    }
    gradient(x_new, g_new);

    const VectorXd s = x_new - res.x;
    const VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (first && sy > 1e-14) {
      hinv *= sy / y.squaredNorm();
      first = false;
    }
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const VectorXd hy = hinv * y;
      const double yhy = y.dot(hy);
      hinv += ((sy + yhy) / (sy * sy)) * (s * s.transpose());
      hinv -= (hy * s.transpose() + s * hy.transpose()) / sy;
    }

    res.x = x_new;
    fx = f_new;
    g = g_new;
    if (fx <= opt.stop_value) {
      res.converged = true;
      break;
    }
    if (s.lpNorm<Eigen::Infinity>() < 1e-14) break;
  }

  res.value = fx;
  res.evals = evals;
  return res;
}

}  // namespace oqctrl
