#include "oqctrl/eigenflow.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "oqctrl/errors.hpp"

namespace oqctrl {

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_to_pi(double x) {
  double w = std::remainder(x, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

// Min-cost assignment (Hungarian algorithm with potentials), O(n^3).
std::vector<int> min_cost_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = 1e300;
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      int j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

UnitaryEigs diagonalize_unitary(const Matrix& u, double tol) {
  if (u.rows() != u.cols()) throw ContractViolation("diagonalize_unitary: not square");
  if (unitarity_defect(u) > tol)
    throw ContractViolation("diagonalize_unitary: input is not unitary");
  const int n = static_cast<int>(u.rows());

  Eigen::ComplexEigenSolver<Matrix> solver(u);
  if (solver.info() != Eigen::Success)
    throw PropagationError("diagonalize_unitary: eigensolver failed");
  Vector lambda = solver.eigenvalues();
  Matrix vecs = solver.eigenvectors();

  // Re-orthonormalize within eigenvalue clusters (degeneracies).
  std::vector<char> done(n, 0);
  for (int i = 0; i < n; ++i) {
    if (done[i]) continue;
    std::vector<int> cluster{i};
    for (int j = i + 1; j < n; ++j)
      if (!done[j] && std::abs(lambda(i) - lambda(j)) < 1e-7) cluster.push_back(j);
    if (cluster.size() > 1) {
      Matrix block(n, cluster.size());
      for (size_t c = 0; c < cluster.size(); ++c) block.col(c) = vecs.col(cluster[c]);
      Eigen::HouseholderQR<Matrix> qr(block);
      Matrix q = qr.householderQ() * Matrix::Identity(n, static_cast<int>(cluster.size()));
      for (size_t c = 0; c < cluster.size(); ++c) vecs.col(cluster[c]) = q.col(c);
    }
    for (int idx : cluster) done[idx] = 1;
  }

  RealVector phases(n);
  for (int i = 0; i < n; ++i) {
    const Complex l = lambda(i) / std::abs(lambda(i));
    double ph = -std::arg(l);
    if (ph <= -kPi) ph += 2.0 * kPi;
    phases(i) = ph;
    vecs.col(i).normalize();
  }

  // Reconstruction sanity: U v = e^{-i phase} v.
  double resid = 0.0;
  for (int i = 0; i < n; ++i) {
    const Complex ev = std::exp(Complex(0, -phases(i)));
    resid = std::max(resid, (u * vecs.col(i) - ev * vecs.col(i)).cwiseAbs().maxCoeff());
  }
  if (resid > 1e-9)
    throw PropagationError("diagonalize_unitary: reconstruction residual too large");
  return UnitaryEigs{std::move(phases), std::move(vecs)};
}

MatchResult match_labels(const Matrix& prev, const Matrix& next) {
  if (prev.rows() != next.rows() || prev.cols() != next.cols())
    throw ContractViolation("match_labels: dimension mismatch");
  const int n = static_cast<int>(prev.cols());
  const Matrix overlap = prev.adjoint() * next;
  const Eigen::MatrixXd gain = overlap.cwiseAbs2();

  std::vector<int> perm = min_cost_assignment(-gain);

  bool ambiguous = false;
  for (int i = 0; i < n && !ambiguous; ++i) {
    double best = -1.0, second = -1.0;
    for (int j = 0; j < n; ++j) {
      const double g = gain(i, j);
      if (g > best) {
        second = best;
        best = g;
      } else if (g > second) {
        second = g;
      }
    }
    if (n > 1 && best - second < 1e-6) ambiguous = true;
  }

  MatchResult res;
  res.perm = perm;
  res.vectors.resize(prev.rows(), n);
  res.min_overlap = 1.0;
  res.ambiguous = ambiguous;
  for (int i = 0; i < n; ++i) {
    const Complex o = overlap(i, perm[i]);
    const double mag = std::abs(o);
    res.min_overlap = std::min(res.min_overlap, mag);
    const Complex phase = mag > 1e-14 ? o / mag : Complex(1, 0);
    res.vectors.col(i) = next.col(perm[i]) * std::conj(phase);
  }
  return res;
}

std::vector<double> retrieve_phase(std::span<const Complex> f, double dt) {
  const int n = static_cast<int>(f.size());
  if (n < 2) throw ContractViolation("retrieve_phase: need at least two samples");
  for (const Complex& z : f)
    if (std::abs(z) < 1.0 - 1e-6)
      throw ContractViolation("retrieve_phase: samples must have unit modulus");
  for (int k = 0; k + 1 < n; ++k) {
    const double jump = std::abs(std::arg(f[k + 1] * std::conj(f[k])));
    if (jump >= kPi / 2.0)
      throw UndersampledGridError("retrieve_phase: per-step phase jump >= pi/2");
  }

  // theta' = Re[i f'/f] for f = exp(-i theta); central differences inside,
  // one-sided at the ends, then a cumulative trapezoid.
  std::vector<double> rate(n);
  auto log_rate = [&](const Complex& df, const Complex& fk) {
    return (Complex(0, 1) * df / fk).real();
  };
  rate[0] = log_rate((f[1] - f[0]) / dt, f[0]);
  rate[n - 1] = log_rate((f[n - 1] - f[n - 2]) / dt, f[n - 1]);
  for (int k = 1; k + 1 < n; ++k)
    rate[k] = log_rate((f[k + 1] - f[k - 1]) / (2.0 * dt), f[k]);

  std::vector<double> theta(n);
  theta[0] = -std::arg(f[0]);
  if (theta[0] <= -kPi) theta[0] += 2.0 * kPi;
  for (int k = 1; k < n; ++k)
    theta[k] = theta[k - 1] + 0.5 * dt * (rate[k - 1] + rate[k]);
  return theta;
}

EigenFlow EigenFlow::build(const std::vector<Matrix>& us, const Matrix& h_at_t0,
                           double dt) {
  if (us.size() < 2) throw ContractViolation("EigenFlow: need at least two nodes");
  const int dim = static_cast<int>(us.front().rows());
  if ((us.front() - identity(dim)).cwiseAbs().maxCoeff() > 1e-8)
    throw ContractViolation("EigenFlow: us[0] must be the identity");

  EigenFlow flow;
  flow.dim_ = dim;
  flow.dt_ = dt;
  flow.vecs_.reserve(us.size());
  flow.eps_.reserve(us.size());

  // t = 0 is fully degenerate; label by the instantaneous Hamiltonian.
  Eigen::SelfAdjointEigenSolver<Matrix> h0(h_at_t0);
  flow.vecs_.push_back(h0.eigenvectors());
  flow.eps_.push_back(RealVector::Zero(dim));

  for (size_t k = 1; k < us.size(); ++k) {
    UnitaryEigs eigs = diagonalize_unitary(us[k]);
    MatchResult match = match_labels(flow.vecs_.back(), eigs.vectors);
    flow.min_overlap_ = std::min(flow.min_overlap_, match.min_overlap);

    RealVector eps(dim);
    for (int n = 0; n < dim; ++n) {
      const double raw = eigs.phases(match.perm[n]);
      const double prev = flow.eps_.back()(n);
      const double delta = wrap_to_pi(raw - prev);
      if (std::abs(delta) >= kPi / 2.0)
        throw UndersampledGridError(
            "EigenFlow: eigenphase step >= pi/2, refine the time grid");
      eps(n) = prev + delta;
    }
    flow.vecs_.push_back(std::move(match.vectors));
    flow.eps_.push_back(std::move(eps));
  }

  // Pair phases; increments are exact principal-branch steps, so
  // exp(-i theta_j) reproduces the eigenvalue products to roundoff.
  const int n_nodes = static_cast<int>(us.size());
  flow.theta_.resize(n_nodes);
  for (int k = 0; k < n_nodes; ++k) {
    RealVector th(dim * dim);
    for (int n = 0; n < dim; ++n)
      for (int m = 0; m < dim; ++m)
        th(n * dim + m) = flow.eps_[k](n) - flow.eps_[k](m);
    flow.theta_[k] = std::move(th);
  }

  // Bohr frequencies: centered differences of the unwrapped pair phases.
  flow.omega_.resize(n_nodes);
  for (int k = 0; k < n_nodes; ++k) {
    RealVector om(dim * dim);
    for (int j = 0; j < dim * dim; ++j) {
      if (j / dim == j % dim) {
        om(j) = 0.0;
      } else if (k == 0) {
        om(j) = (flow.theta_[1](j) - flow.theta_[0](j)) / dt;
      } else if (k == n_nodes - 1) {
        om(j) = (flow.theta_[k](j) - flow.theta_[k - 1](j)) / dt;
      } else {
        om(j) = (flow.theta_[k + 1](j) - flow.theta_[k - 1](j)) / (2.0 * dt);
      }
    }
    flow.omega_[k] = std::move(om);
  }
  return flow;
}

EigenOperatorSet EigenFlow::ops_at(int k) const {
  EigenOperatorSet set;
  set.dim = dim_;
  set.ops.reserve(dim_ * dim_);
  const Matrix& v = vecs_[k];
  for (int n = 0; n < dim_; ++n)
    for (int m = 0; m < dim_; ++m)
      set.ops.push_back(v.col(n) * v.col(m).adjoint());
  set.thetas = theta_[k];
  set.omegas = omega_[k];
  return set;
}

EigenOperatorSet build_eigenoperators(const EigenFlow& flow, int t_index) {
  if (t_index < 0 || t_index >= flow.n_nodes())
    throw ContractViolation("build_eigenoperators: index out of range");
  return flow.ops_at(t_index);
}

}  // namespace oqctrl
