#include "oqctrl/operators.hpp"

#include <cmath>

#include "oqctrl/errors.hpp"

namespace oqctrl {

double hermiticity_defect(const Matrix& a) {
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

double unitarity_defect(const Matrix& a) {
  Matrix g = a.adjoint() * a;
  g.diagonal().array() -= 1.0;
  return g.cwiseAbs().maxCoeff();
}

Operator::Operator(Matrix entries) : mat_(std::move(entries)) {
  if (mat_.rows() != mat_.cols() || mat_.rows() < 1)
    throw ContractViolation("Operator requires a non-empty square matrix");
  hermitian_ = hermiticity_defect(mat_) <= kFlagTol;
  unitary_ = unitarity_defect(mat_) <= kFlagTol;
}

ModelSpec ModelSpec::spin(int dim, double delta) {
  if (dim < 2) throw ContractViolation("spin model requires dim >= 2");
  ModelSpec s;
  s.kind = ModelKind::SpinJ;
  s.dim = dim;
  s.delta = delta;
  s.u = 2.0 * delta / s.spin_j();
  return s;
}

ModelSpec ModelSpec::two_qubit(double delta, double omega1, double omega2) {
  ModelSpec s;
  s.kind = ModelKind::TwoQubit;
  s.dim = 4;
  s.delta = delta;
  s.omega1 = omega1;
  s.omega2 = omega2;
  return s;
}

Operator angular_momentum(int dim, Axis axis) {
  if (dim < 2) throw ContractViolation("angular_momentum: dim must be >= 2");
  const double j = 0.5 * (dim - 1);
  Matrix jz = Matrix::Zero(dim, dim);
  Matrix jplus = Matrix::Zero(dim, dim);
  for (int k = 0; k < dim; ++k) {
    const double m = j - k;  // basis ordered |j,j>, |j,j-1>, ..., |j,-j>
    jz(k, k) = m;
    if (k > 0) jplus(k - 1, k) = std::sqrt(j * (j + 1) - (m + 1) * m);
  }
  switch (axis) {
    case Axis::Z:
      return Operator(jz);
    case Axis::X:
      return Operator(0.5 * (jplus + jplus.adjoint()));
    case Axis::Y:
      return Operator(Complex(0, -0.5) * (jplus - jplus.adjoint()));
  }
  throw ContractViolation("angular_momentum: bad axis");
}

Operator drift_hamiltonian(const ModelSpec& spec) {
  if (spec.kind == ModelKind::SpinJ) {
    const Matrix jz = angular_momentum(spec.dim, Axis::Z).mat();
    const Matrix jx = angular_momentum(spec.dim, Axis::X).mat();
    return Operator(spec.u * (jz * jz) + spec.delta * jx);
  }
  // Two qubits, basis ordered so the drift is the diagonal
  // (-w1-w2, w1-w2, -w1+w2, w1+w2).
  Matrix h = Matrix::Zero(4, 4);
  h(0, 0) = -spec.omega1 - spec.omega2;
  h(1, 1) = spec.omega1 - spec.omega2;
  h(2, 2) = -spec.omega1 + spec.omega2;
  h(3, 3) = spec.omega1 + spec.omega2;
  return Operator(h);
}

Operator control_operator(const ModelSpec& spec) {
  if (spec.kind == ModelKind::SpinJ) return angular_momentum(spec.dim, Axis::Z);
  // Exchange coupling s1+ s2- + s2+ s1-: couples the middle two basis states.
  Matrix v = Matrix::Zero(4, 4);
  v(1, 2) = 1.0;
  v(2, 1) = 1.0;
  return Operator(v);
}

Matrix pauli(Axis axis) {
  Matrix s(2, 2);
  switch (axis) {
    case Axis::X:
      s << 0, 1, 1, 0;
      break;
    case Axis::Y:
      s << 0, Complex(0, -1), Complex(0, 1), 0;
      break;
    case Axis::Z:
      s << 1, 0, 0, -1;
      break;
  }
  return s;
}

Matrix identity(int dim) { return Matrix::Identity(dim, dim); }

Matrix tensor(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int k = 0; k < a.cols(); ++k)
      out.block(i * b.rows(), k * b.cols(), b.rows(), b.cols()) = a(i, k) * b;
  return out;
}

Eigensystem hermitian_eigensystem(const Operator& a) {
  if (!a.is_hermitian(1e-10))
    throw ContractViolation("hermitian_eigensystem: input is not Hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a.mat());
  if (solver.info() != Eigen::Success)
    throw PropagationError("hermitian_eigensystem: solver failed");
  return Eigensystem{solver.eigenvalues(), solver.eigenvectors()};
}

Operator matrix_function(const Operator& a, MatrixFn fn) {
  if (fn == MatrixFn::Log) {
    Eigensystem es = hermitian_eigensystem(a);
    RealVector vals = es.values;
    for (int i = 0; i < vals.size(); ++i) {
      if (vals(i) < 1e-14) {
        if (vals(i) < -1e-8)
          throw ContractViolation("matrix_function: log of operator with negative spectrum");
        vals(i) = 1e-14;  // 0 log 0 -> 0 limit
      }
      vals(i) = std::log(vals(i));
    }
    Matrix out = es.vectors * vals.asDiagonal() * es.vectors.adjoint();
    return Operator(std::move(out));
  }
  // Exp: Hermitian fast path, otherwise a general diagonalization.
  if (a.hermitian()) {
    Eigensystem es = hermitian_eigensystem(a);
    Vector evals = es.values.array().exp().matrix().cast<Complex>();
    return Operator(es.vectors * evals.asDiagonal() * es.vectors.adjoint());
  }
  Eigen::ComplexEigenSolver<Matrix> solver(a.mat());
  if (solver.info() != Eigen::Success)
    throw PropagationError("matrix_function: eigensolver failed");
  Vector evals = solver.eigenvalues().array().exp();
  Matrix v = solver.eigenvectors();
  return Operator(v * evals.asDiagonal() * v.partialPivLu().solve(identity(a.dim())));
}

Matrix gibbs_state(const Operator& hamiltonian, double beta) {
  Eigensystem es = hermitian_eigensystem(hamiltonian);
  // Shift by the ground energy before exponentiating.
  RealVector shifted = -(beta * (es.values.array() - es.values.minCoeff()));
  RealVector weights = shifted.array().exp();
  weights /= weights.sum();
  return es.vectors * weights.cast<Complex>().asDiagonal() * es.vectors.adjoint();
}

}  // namespace oqctrl
