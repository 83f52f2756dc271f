#pragma once

#include <span>
#include <vector>

#include "oqctrl/operators.hpp"

namespace oqctrl {

struct UnitaryEigs {
  RealVector phases;  // eigenvalue = exp(-i phase), phase in (-pi, pi]
  Matrix vectors;     // orthonormal columns
};

/// Diagonalize a unitary matrix. Eigenvector columns are re-orthonormalized
/// within eigenvalue clusters so degeneracies do not spoil orthogonality.
UnitaryEigs diagonalize_unitary(const Matrix& u, double tol = 1e-8);

struct MatchResult {
  std::vector<int> perm;  // perm[n] = column of `next` matched to prev column n
  Matrix vectors;         // permuted and phase-fixed copy of `next`
  double min_overlap;     // smallest matched |<prev|next>|
  bool ambiguous;         // two candidate overlaps within 1e-6 at a degeneracy
};

/// Optimal assignment between two orthonormal column sets, maximizing the
/// total squared overlap; the matched vectors' global phases are fixed so
/// <prev_n|next_n> is real positive.
MatchResult match_labels(const Matrix& prev, const Matrix& next);

/// Unwrapped phase theta(t) of a unit-modulus sequence f = exp(-i theta),
/// retrieved by integrating the logarithmic derivative (central differences +
/// trapezoid) instead of taking inverse trigonometric functions pointwise.
/// Throws UndersampledGridError when any per-step argument jump reaches pi/2.
std::vector<double> retrieve_phase(std::span<const Complex> f_samples, double dt);

/// Eigenoperators F_j = |phi_n><phi_m| of the evolution operator at one time,
/// with the pair phases theta_j and Bohr frequencies omega_j. Index
/// j = n*dim + m; diagonal entries (n == m) carry theta = omega = 0.
struct EigenOperatorSet {
  int dim = 0;
  std::vector<Matrix> ops;
  RealVector thetas;
  RealVector omegas;

  int pair(int n, int m) const { return n * dim + m; }
  int conjugate_index(int j) const { return (j % dim) * dim + j / dim; }
};

/// Time-indexed record of the evolution-operator eigenvectors, unwrapped
/// eigenphases eps_n(t) and Bohr frequencies. Construction walks the grid
/// sequentially to keep labels continuous; reads are thread-safe afterwards.
class EigenFlow {
 public:
  /// Build from U_S at every node of a uniform grid (us[0] must be the
  /// identity); the fully degenerate t = 0 point is labeled by the
  /// eigenbasis of the instantaneous Hamiltonian h_at_t0.
  static EigenFlow build(const std::vector<Matrix>& us, const Matrix& h_at_t0,
                         double dt);

  int dim() const { return dim_; }
  int n_nodes() const { return static_cast<int>(vecs_.size()); }
  double dt() const { return dt_; }

  const Matrix& vectors(int k) const { return vecs_[k]; }
  const RealVector& level_phases(int k) const { return eps_[k]; }
  double theta(int k, int j) const { return theta_[k](j); }
  double omega(int k, int j) const { return omega_[k](j); }

  /// Smallest per-step matched overlap seen during construction.
  double min_step_overlap() const { return min_overlap_; }

  EigenOperatorSet ops_at(int k) const;

 private:
  int dim_ = 0;
  double dt_ = 0.0;
  std::vector<Matrix> vecs_;
  std::vector<RealVector> eps_;
  std::vector<RealVector> theta_;
  std::vector<RealVector> omega_;
  double min_overlap_ = 1.0;
};

/// Free-function spelling used by the dissipator assembly.
EigenOperatorSet build_eigenoperators(const EigenFlow& flow, int t_index);

}  // namespace oqctrl
