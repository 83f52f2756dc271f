#include "oqctrl/thermo.hpp"

#include <cmath>

#include "oqctrl/errors.hpp"

namespace oqctrl {

namespace {

constexpr double kSpectralFloor = 1e-14;

void check_state(const Matrix& rho, const char* who) {
  if (rho.rows() != rho.cols()) throw ContractViolation(std::string(who) + ": not square");
  if (std::abs(rho.trace().real() - 1.0) > 1e-6 || std::abs(rho.trace().imag()) > 1e-6)
    throw ContractViolation(std::string(who) + ": trace deviates from 1");
}

// Floored spectral decomposition of a (numerically) Hermitian state.
Eigen::SelfAdjointEigenSolver<Matrix> decompose(const Matrix& rho, const char* who) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()));
  if (es.eigenvalues().minCoeff() < -1e-8)
    throw ContractViolation(std::string(who) + ": state is not positive semidefinite");
  return es;
}

Matrix floored_log(const Eigen::SelfAdjointEigenSolver<Matrix>& es) {
  RealVector vals = es.eigenvalues();
  for (int i = 0; i < vals.size(); ++i)
    vals(i) = std::log(std::max(vals(i), kSpectralFloor));
  return es.eigenvectors() * vals.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace

double entropy(const Matrix& rho) {
  check_state(rho, "entropy");
  const auto es = decompose(rho, "entropy");
  double s = 0.0;
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    const double p = es.eigenvalues()(i);
    if (p > kSpectralFloor) s -= p * std::log(p);
  }
  return std::max(s, 0.0);
}

double relative_entropy(const Matrix& rho, const Matrix& sigma) {
  check_state(rho, "relative_entropy");
  const auto es_r = decompose(rho, "relative_entropy");
  const auto es_s = decompose(sigma, "relative_entropy");
  double tr_rho_log_rho = 0.0;
  for (int i = 0; i < es_r.eigenvalues().size(); ++i) {
    const double p = es_r.eigenvalues()(i);
    if (p > kSpectralFloor) tr_rho_log_rho += p * std::log(p);
  }
  const double cross = (rho * floored_log(es_s)).trace().real();
  return tr_rho_log_rho - cross;
}

double entropy_production_rate(const Matrix& rho, const GKLSGenerator& gen) {
  bool dissipative = false;
  for (double r : gen.rates)
    if (r != 0.0) dissipative = true;
  if (!dissipative) return 0.0;  // unitary generator: no entropy production
  return entropy_production_rate(rho, gen, instantaneous_attractor(gen));
}

double entropy_production_rate(const Matrix& rho, const GKLSGenerator& gen,
                               const Matrix& attractor) {
  check_state(rho, "entropy_production_rate");
  const Matrix lrho = gen.apply(rho);
  const Matrix log_rho = floored_log(decompose(rho, "entropy_production_rate"));
  const Matrix log_ia = floored_log(decompose(attractor, "entropy_production_rate"));
  return (-(lrho * log_rho).trace() + (lrho * log_ia).trace()).real();
}

double accumulate_entropy_production(std::span<const double> rates, double dt) {
  if (rates.size() < 2) return 0.0;
  double acc = 0.0;
  for (size_t k = 0; k + 1 < rates.size(); ++k) acc += 0.5 * dt * (rates[k] + rates[k + 1]);
  return acc;
}

double purity(const Matrix& rho) { return (rho * rho).trace().real(); }

Eigen::Vector3d bloch_vector(const Matrix& rho) {
  if (rho.rows() != 2 || rho.cols() != 2)
    throw ContractViolation("bloch_vector: requires a qubit state");
  return {(rho * pauli(Axis::X)).trace().real(),
          (rho * pauli(Axis::Y)).trace().real(),
          (rho * pauli(Axis::Z)).trace().real()};
}

Matrix bloch_state(const Eigen::Vector3d& b) {
  return 0.5 * (identity(2) + b.x() * pauli(Axis::X) + b.y() * pauli(Axis::Y) +
                b.z() * pauli(Axis::Z));
}

double generalized_purity(const Matrix& rho) {
  if (rho.rows() != 4 || rho.cols() != 4)
    throw ContractViolation("generalized_purity: requires a two-qubit state");
  // Pauli-like generators of the {|01>, |10>} exchange subspace.
  Matrix sx = Matrix::Zero(4, 4), sy = Matrix::Zero(4, 4), sz = Matrix::Zero(4, 4);
  sx(1, 2) = 1.0;
  sx(2, 1) = 1.0;
  sy(1, 2) = Complex(0, -1);
  sy(2, 1) = Complex(0, 1);
  sz(1, 1) = 1.0;
  sz(2, 2) = -1.0;
  double gp = 0.0;
  for (const Matrix* s : {&sx, &sy, &sz}) {
    const double ev = (rho * (*s)).trace().real();
    gp += ev * ev;
  }
  return gp;
}

}  // namespace oqctrl
