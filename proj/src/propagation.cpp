#include "oqctrl/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "oqctrl/errors.hpp"

namespace oqctrl {

TimeGrid::TimeGrid(double t0, double t1, int n_steps)
    : t0(t0), t1(t1), n_steps(n_steps) {
  if (n_steps < 1 || !(t1 > t0))
    throw ContractViolation("TimeGrid requires t1 > t0 and n_steps >= 1");
}

namespace {

// J_0..J_kmax by Miller's downward recurrence, normalized with
// J_0 + 2 sum_k J_2k = 1.
std::vector<double> bessel_j_sequence(int kmax, double x) {
  std::vector<double> out(kmax + 1, 0.0);
  if (x <= 0.0) {
    out[0] = 1.0;
    return out;
  }
  const int start = kmax + 20 + static_cast<int>(1.3 * x);
  double jp = 0.0, jc = 1e-300, norm = 0.0;
  for (int k = start; k >= 0; --k) {
    const double jm = (2.0 * (k + 1) / x) * jc - jp;
    jp = jc;
    jc = jm;
    if (std::abs(jc) > 1e250) {  // rescale to avoid overflow
      jc *= 1e-250;
      jp *= 1e-250;
      norm *= 1e-250;
      for (auto& v : out) v *= 1e-250;
    }
    if (k <= kmax) out[k] = jc;
    if (k > 0 && k % 2 == 0) norm += 2.0 * jc;
  }
  norm += jc;
  for (auto& v : out) v /= norm;
  return out;
}

struct RealBounds {
  double lo, hi;
};

// Gershgorin interval for a (numerically) Hermitian matrix.
RealBounds gershgorin_interval(const Matrix& h) {
  double lo = 1e300, hi = -1e300;
  for (int i = 0; i < h.rows(); ++i) {
    double r = 0.0;
    for (int j = 0; j < h.cols(); ++j)
      if (j != i) r += std::abs(h(i, j));
    const double c = h(i, i).real();
    lo = std::min(lo, c - r);
    hi = std::max(hi, c + r);
  }
  return {lo, hi};
}

}  // namespace

Matrix chebychev_step(const Matrix& hamiltonian, double dt, const Matrix& u_in) {
  const RealBounds b = gershgorin_interval(hamiltonian);
  const double center = 0.5 * (b.hi + b.lo);
  const double half = 0.5 * (b.hi - b.lo) * 1.1;  // safety factor
  double x = half * std::abs(dt);
  if (x > 30.0) {  // keep the Bessel argument moderate
    const double m = std::ceil(x / 20.0);
    if (m > 4096.0)
      throw PropagationError("chebychev_step: spectral range far exceeds the step");
    Matrix u = u_in;
    for (int k = 0; k < static_cast<int>(m); ++k)
      u = chebychev_step(hamiltonian, dt / m, u);
    return u;
  }
  const Complex phase = std::exp(Complex(0, -center * dt));
  if (x < 1e-14) return phase * u_in;

  int kmax = static_cast<int>(x) + 20;
  std::vector<double> jk = bessel_j_sequence(kmax, x);
  while (std::abs(jk[kmax]) > 1e-16) {
    kmax += 10;
    jk = bessel_j_sequence(kmax, x);
    if (kmax > 2000) throw PropagationError("chebychev_step: expansion did not converge");
  }
  int kcut = kmax;
  while (kcut > 1 && std::abs(jk[kcut - 1]) < 1e-16) --kcut;

  const double sgn = dt >= 0 ? 1.0 : -1.0;
  const Matrix xn = (hamiltonian - center * identity(hamiltonian.rows())) / half;
  Matrix phi_prev = u_in;
  Matrix phi = xn * u_in;
  Matrix acc = jk[0] * phi_prev;
  Complex ik(1.0, 0.0);
  for (int k = 1; k <= kcut; ++k) {
    ik *= Complex(0, -sgn);
    acc += (2.0 * jk[k] * ik) * phi;
    if (k < kcut) {
      Matrix next = 2.0 * (xn * phi) - phi_prev;
      phi_prev.swap(phi);
      phi = std::move(next);
    }
  }
  return phase * acc;
}

std::vector<Matrix> propagate_unitary(const std::function<Matrix(double)>& h_of_t,
                                      const TimeGrid& grid, int dim) {
  std::vector<Matrix> us;
  us.reserve(grid.n_nodes());
  us.push_back(identity(dim));
  const double dt = grid.dt();
  for (int k = 0; k < grid.n_steps; ++k) {
    const Matrix h = h_of_t(grid.node(k) + 0.5 * dt);
    us.push_back(chebychev_step(h, dt, us.back()));
  }
  return us;
}

int Superoperator::dim() const {
  return static_cast<int>(std::lround(std::sqrt(static_cast<double>(m.rows()))));
}

Matrix Superoperator::apply(const Matrix& rho) const {
  return unvec(m * vec(rho), static_cast<int>(rho.rows()));
}

Superoperator Superoperator::hamiltonian_part(const Matrix& h) {
  const int d = static_cast<int>(h.rows());
  const Matrix id = identity(d);
  Matrix l = Complex(0, -1) * (tensor(id, h) - tensor(h.transpose(), id));
  return Superoperator{std::move(l)};
}

Superoperator Superoperator::dissipator_part(const std::vector<Matrix>& jumps,
                                             const std::vector<double>& rates) {
  if (jumps.size() != rates.size())
    throw ContractViolation("dissipator_part: jumps/rates size mismatch");
  if (jumps.empty()) throw ContractViolation("dissipator_part: no jump operators");
  const int d = static_cast<int>(jumps.front().rows());
  const Matrix id = identity(d);
  Matrix l = Matrix::Zero(d * d, d * d);
  for (size_t j = 0; j < jumps.size(); ++j) {
    if (rates[j] == 0.0) continue;
    const Matrix& f = jumps[j];
    const Matrix fdf = f.adjoint() * f;
    l += rates[j] * (tensor(f.conjugate(), f) -
                     0.5 * (tensor(id, fdf) + tensor(fdf.transpose(), id)));
  }
  return Superoperator{std::move(l)};
}

Vector vec(const Matrix& rho) {
  return Eigen::Map<const Vector>(rho.data(), rho.size());
}

Matrix unvec(const Vector& rho_vec, int dim) {
  return Eigen::Map<const Matrix>(rho_vec.data(), dim, dim);
}

namespace {

// Fixed Leja interpolation set for exp on the boundary of the square
// [-R, R] x [-iR, iR]; per-step generators are rescaled into it by
// substepping. Divided differences come from the exponential of the
// associated bidiagonal matrix (first column), computed once.
constexpr double kLejaRadius = 3.2;
constexpr int kLejaCount = 56;

struct LejaTable {
  std::vector<Complex> pts;
  std::vector<Complex> dd;
};

Matrix triangular_exp(const Matrix& z) {
  const double norm = z.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  double scale = 1.0;
  while (norm * scale > 0.5) {
    scale *= 0.5;
    ++s;
  }
  const int n = static_cast<int>(z.rows());
  Matrix a = scale * z;
  Matrix term = identity(n);
  Matrix acc = identity(n);
  for (int k = 1; k <= 24; ++k) {
    term = (a * term) / static_cast<double>(k);
    acc += term;
    if (term.cwiseAbs().maxCoeff() < 1e-20) break;
  }
  for (int k = 0; k < s; ++k) acc = acc * acc;
  return acc;
}

LejaTable build_leja_table() {
  // Candidate points on the square boundary, closed under conjugation.
  std::vector<Complex> cand;
  const int per_side = 160;
  for (int i = 0; i <= per_side; ++i) {
    const double t = -kLejaRadius + 2.0 * kLejaRadius * i / per_side;
    cand.emplace_back(t, kLejaRadius);
    cand.emplace_back(t, -kLejaRadius);
    cand.emplace_back(kLejaRadius, t);
    cand.emplace_back(-kLejaRadius, t);
  }
  std::vector<Complex> pts;
  pts.emplace_back(kLejaRadius, 0.0);
  std::vector<double> logprod(cand.size(), 0.0);
  auto update = [&](const Complex& p) {
    for (size_t i = 0; i < cand.size(); ++i)
      logprod[i] += std::log(std::max(std::abs(cand[i] - p), 1e-300));
  };
  update(pts.back());
  while (static_cast<int>(pts.size()) < kLejaCount) {
    size_t best = 0;
    for (size_t i = 1; i < cand.size(); ++i)
      if (logprod[i] > logprod[best]) best = i;
    Complex p = cand[best];
    pts.push_back(p);
    update(p);
    if (std::abs(p.imag()) > 1e-12 && static_cast<int>(pts.size()) < kLejaCount) {
      Complex q = std::conj(p);  // keep the set conjugate-symmetric
      pts.push_back(q);
      update(q);
    }
  }

  const int n = static_cast<int>(pts.size());
  Matrix z = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    z(i, i) = pts[i];
    if (i > 0) z(i, i - 1) = 1.0;
  }
  const Matrix ez = triangular_exp(z);
  LejaTable table;
  table.pts = pts;
  table.dd.resize(n);
  for (int i = 0; i < n; ++i) table.dd[i] = ez(i, 0);
  return table;
}

const LejaTable& leja_table() {
  static const LejaTable table = build_leja_table();
  return table;
}

double gershgorin_disk_bound(const Matrix& a) {
  double bound = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    double r = 0.0;
    for (int j = 0; j < a.cols(); ++j)
      if (j != i) r += std::abs(a(i, j));
    bound = std::max(bound, std::abs(a(i, i)) + r);
  }
  return bound;
}

Matrix newton_apply(const Matrix& a, const Matrix& v) {
  const LejaTable& t = leja_table();
  Matrix acc = t.dd[0] * v;
  Matrix r = v;
  const double vnorm = std::max(v.norm(), 1e-300);
  int small_in_a_row = 0;
  for (size_t k = 1; k < t.pts.size(); ++k) {
    r = a * r - t.pts[k - 1] * r;
    const Matrix term = t.dd[k] * r;
    acc += term;
    const double tn = term.norm();
    if (tn > 1e8 * vnorm)
      throw PropagationError("newton_step: interpolation diverged (spectral enclosure exceeded)");
    small_in_a_row = tn <= 1e-16 * vnorm ? small_in_a_row + 1 : 0;
    if (small_in_a_row >= 2) return acc;
  }
  // All points consumed without the tail dropping below threshold.
  if (small_in_a_row == 0)
    throw PropagationError("newton_step: expansion did not converge within the point budget");
  return acc;
}

Matrix newton_exp_action(const Matrix& liouvillian, double dt, const Matrix& rhs) {
  if (liouvillian.rows() != liouvillian.cols() || liouvillian.rows() != rhs.rows())
    throw ContractViolation("newton_step: dimension mismatch");
  const double bound = gershgorin_disk_bound(liouvillian) * std::abs(dt);
  if (bound < 1e-300) return rhs;
  int m = std::max(1, static_cast<int>(std::ceil(bound / 3.0)));
  for (int attempt = 0; attempt < 3; ++attempt) {
    try {
      const Matrix a = (dt / m) * liouvillian;
      Matrix v = rhs;
      for (int k = 0; k < m; ++k) v = newton_apply(a, v);
      return v;
    } catch (const PropagationError&) {
      if (attempt == 2) throw;
      m *= 2;  // enclosure was too tight; shrink the substep
    }
  }
  throw PropagationError("newton_step: unreachable");
}

}  // namespace

Vector newton_step(const Matrix& liouvillian, double dt, const Vector& rho_vec) {
  return newton_exp_action(liouvillian, dt, rho_vec);
}

Matrix newton_step_multi(const Matrix& liouvillian, double dt, const Matrix& rhs) {
  return newton_exp_action(liouvillian, dt, rhs);
}

Matrix step_density(const Matrix& liouvillian, double dt, const Matrix& rho) {
  const int d = static_cast<int>(rho.rows());
  Matrix out = unvec(newton_step(liouvillian, dt, vec(rho)), d);
  return 0.5 * (out + out.adjoint());
}

void step_density_batch(const Matrix& liouvillian, double dt,
                        std::vector<Matrix>& states) {
  if (states.empty()) return;
  const int d = static_cast<int>(states.front().rows());
  Matrix stacked(d * d, static_cast<int>(states.size()));
  for (size_t p = 0; p < states.size(); ++p) stacked.col(static_cast<int>(p)) = vec(states[p]);
  stacked = newton_step_multi(liouvillian, dt, stacked);
  for (size_t p = 0; p < states.size(); ++p) {
    Matrix out = unvec(stacked.col(static_cast<int>(p)), d);
    states[p] = 0.5 * (out + out.adjoint());
  }
}

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double kC[7] = {0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5, 8.0 / 9, 1.0, 1.0};
constexpr double kA[7][6] = {
    {},
    {1.0 / 5},
    {3.0 / 40, 9.0 / 40},
    {44.0 / 45, -56.0 / 15, 32.0 / 9},
    {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
    {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176, -5103.0 / 18656},
    {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784, 11.0 / 84}};
constexpr double kB5[7] = {35.0 / 384,      0.0,  500.0 / 1113, 125.0 / 192,
                           -2187.0 / 6784, 11.0 / 84, 0.0};
constexpr double kB4[7] = {5179.0 / 57600,  0.0,  7571.0 / 16695, 393.0 / 640,
                           -92097.0 / 339200, 187.0 / 2100, 1.0 / 40};

}  // namespace

std::vector<Vector> oracle_integrate(const std::function<Matrix(double)>& l_of_t,
                                     const TimeGrid& grid, const Vector& rho0,
                                     double tol) {
  std::vector<Vector> out;
  out.reserve(grid.n_nodes());
  out.push_back(rho0);
  Vector y = rho0;
  double t = grid.t0;
  double h = grid.dt() / 8.0;
  const double t_span = grid.t1 - grid.t0;

  for (int node = 1; node < grid.n_nodes(); ++node) {
    const double t_end = grid.node(node);
    while (t < t_end - 1e-14 * t_span) {
      h = std::min(h, t_end - t);
      if (h < 1e-14 * t_span)
        throw PropagationError("oracle_integrate: step size underflow");
      Vector k[7];
      for (int i = 0; i < 7; ++i) {
        Vector yi = y;
        for (int j = 0; j < i; ++j)
          if (kA[i][j] != 0.0) yi += (h * kA[i][j]) * k[j];
        k[i] = l_of_t(t + kC[i] * h) * yi;
      }
      Vector y5 = y, err = Vector::Zero(y.size());
      for (int i = 0; i < 7; ++i) {
        if (kB5[i] != 0.0) y5 += (h * kB5[i]) * k[i];
        err += (h * (kB5[i] - kB4[i])) * k[i];
      }
      const double scale = tol + tol * std::max(y.norm(), y5.norm());
      const double e = err.norm() / scale;
      if (e <= 1.0) {
        t += h;
        y = std::move(y5);
        h *= std::min(4.0, std::max(0.2, 0.9 * std::pow(std::max(e, 1e-10), -0.2)));
      } else {
        h *= std::max(0.1, 0.9 * std::pow(e, -0.2));
      }
    }
    t = t_end;
    out.push_back(y);
  }
  return out;
}

}  // namespace oqctrl
