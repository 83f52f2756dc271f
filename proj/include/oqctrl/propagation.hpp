#pragma once

#include <functional>
#include <vector>

#include "oqctrl/operators.hpp"

namespace oqctrl {

/// Uniform time grid over [t0, t1] with n_steps steps (n_steps + 1 nodes).
struct TimeGrid {
  double t0 = 0.0;
  double t1 = 1.0;
  int n_steps = 1;

  TimeGrid() = default;
  TimeGrid(double t0, double t1, int n_steps);

  double dt() const { return (t1 - t0) / n_steps; }
  double node(int k) const { return t0 + k * dt(); }
  int n_nodes() const { return n_steps + 1; }
};

/// One Chebychev-expanded step U_out = exp(-i H dt) U_in. The spectral range
/// comes from a Gershgorin bound with a 1.1 safety factor; the expansion is
/// truncated when the Bessel coefficients fall below 1e-16.
Matrix chebychev_step(const Matrix& hamiltonian, double dt, const Matrix& u_in);

/// Propagate the evolution operator over the grid with midpoint sampling of
/// H(t) in each step. Returns U at every node, U(t0) = I.
std::vector<Matrix> propagate_unitary(const std::function<Matrix(double)>& h_of_t,
                                      const TimeGrid& grid, int dim);

/// dim^2 x dim^2 matrix acting on column-stacked density matrices.
struct Superoperator {
  Matrix m;

  int dim() const;
  Vector apply(const Vector& rho_vec) const { return m * rho_vec; }
  Matrix apply(const Matrix& rho) const;

  /// -i [H, .]
  static Superoperator hamiltonian_part(const Matrix& h);
  /// sum_j gamma_j (F rho F^dag - 1/2 {F^dag F, rho})
  static Superoperator dissipator_part(const std::vector<Matrix>& jumps,
                                       const std::vector<double>& rates);
};

Vector vec(const Matrix& rho);
Matrix unvec(const Vector& rho_vec, int dim);

/// One step of the Newton polynomial propagator: exp(L dt) rho_vec, with
/// Leja-ordered interpolation points on a normalized spectral enclosure and
/// internal substepping keyed to a per-step Gershgorin bound of L dt.
Vector newton_step(const Matrix& liouvillian, double dt, const Vector& rho_vec);

/// Same expansion applied to several column-stacked states at once.
Matrix newton_step_multi(const Matrix& liouvillian, double dt, const Matrix& rhs);

/// Matrix-level convenience around newton_step; re-Hermitizes the result,
/// which the exact flow preserves.
Matrix step_density(const Matrix& liouvillian, double dt, const Matrix& rho);

/// Batched step_density over a set of states sharing one generator.
void step_density_batch(const Matrix& liouvillian, double dt,
                        std::vector<Matrix>& states);

/// Adaptive Dormand-Prince integration of d rho/dt = L(t) rho with local
/// tolerance `tol`, sampled at every grid node. Validation oracle; not used
/// by the production propagation path.
std::vector<Vector> oracle_integrate(const std::function<Matrix(double)>& l_of_t,
                                     const TimeGrid& grid, const Vector& rho0,
                                     double tol = 1e-12);

}  // namespace oqctrl
