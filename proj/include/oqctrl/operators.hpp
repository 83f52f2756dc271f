#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>

namespace oqctrl {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kFlagTol = 1e-12;

/// Max-abs entry of A - A^dagger.
double hermiticity_defect(const Matrix& a);
/// Max-abs entry of A^dagger A - I.
double unitarity_defect(const Matrix& a);

/// Immutable dense complex square matrix with cached Hermiticity/unitarity
/// flags. Holds Hamiltonians, jump operators and density matrices alike;
/// construction computes the flags once, after which instances are safe to
/// share across threads.
class Operator {
 public:
  explicit Operator(Matrix entries);

  int dim() const { return static_cast<int>(mat_.rows()); }
  const Matrix& mat() const { return mat_; }

  bool hermitian() const { return hermitian_; }
  bool unitary() const { return unitary_; }

  /// Recompute a flag against a caller-supplied tolerance.
  bool is_hermitian(double tol) const { return hermiticity_defect(mat_) <= tol; }
  bool is_unitary(double tol) const { return unitarity_defect(mat_) <= tol; }

  Operator dagger() const { return Operator(mat_.adjoint()); }

 private:
  Matrix mat_;
  bool hermitian_ = false;
  bool unitary_ = false;
};

enum class Axis { X, Y, Z };

enum class ModelKind { SpinJ, TwoQubit };

/// Physical model parameters in atomic units (hbar = k_B = 1).
///
/// spin_j: H0 = u Jz^2 + delta Jx with u = 2 delta / j, j = (dim-1)/2, and
/// control operator Jz. two_qubit: H0 = omega1 s1z + omega2 s2z (diagonal,
/// dim 4) with the exchange control s1+ s2- + s2+ s1-.
struct ModelSpec {
  ModelKind kind = ModelKind::SpinJ;
  int dim = 2;
  double delta = 3e-3;   // energy scale, a.u.
  double u = 0.0;        // on-site interaction, spin_j only
  double omega1 = 0.0;   // two_qubit only
  double omega2 = 0.0;   // two_qubit only

  static ModelSpec spin(int dim, double delta);
  static ModelSpec two_qubit(double delta, double omega1, double omega2);

  double spin_j() const { return 0.5 * (dim - 1); }
};

/// Standard spin-j angular momentum matrix in the Jz eigenbasis,
/// j = (dim-1)/2. dim >= 2.
Operator angular_momentum(int dim, Axis axis);

/// Bare system Hamiltonian of a model.
Operator drift_hamiltonian(const ModelSpec& spec);

/// Operator multiplying the scalar control field.
Operator control_operator(const ModelSpec& spec);

/// Pauli matrix (dim 2, standard convention, sigma_z = diag(1,-1)).
Matrix pauli(Axis axis);

Matrix identity(int dim);
Matrix tensor(const Matrix& a, const Matrix& b);

struct Eigensystem {
  RealVector values;  // ascending
  Matrix vectors;     // orthonormal columns, matching order
};

/// Eigendecomposition of a Hermitian operator; eigenvalues ascending,
/// reconstruction residual <= 1e-12.
Eigensystem hermitian_eigensystem(const Operator& a);

enum class MatrixFn { Exp, Log };

/// f applied on the spectrum via eigendecomposition. Exp accepts any
/// diagonalizable input (Hermitian and anti-Hermitian are the intended
/// cases); Log requires a Hermitian input whose eigenvalues stay positive
/// after the 1e-14 regularization floor.
Operator matrix_function(const Operator& a, MatrixFn fn);

/// exp(-beta H) / Z for a Hermitian Hamiltonian.
Matrix gibbs_state(const Operator& hamiltonian, double beta);

}  // namespace oqctrl
