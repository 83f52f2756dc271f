#pragma once

// Shared test fixtures: seeded random objects and independent oracles. The
// oracles here must stay independent of the library's propagation paths.

#include <complex>
#include <random>
#include <vector>

#include "oqctrl/dissipator.hpp"
#include "oqctrl/operators.hpp"

namespace testsup {

using oqctrl::Complex;
using oqctrl::Matrix;
using oqctrl::Vector;

inline std::mt19937_64 rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Matrix random_ginibre(int dim, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix a(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) a(i, j) = Complex(n(gen), n(gen));
  return a;
}

inline Matrix random_hermitian(int dim, std::mt19937_64& gen, double scale = 1.0) {
  const Matrix a = random_ginibre(dim, gen);
  return scale * 0.5 * (a + a.adjoint());
}

inline Matrix random_unitary(int dim, std::mt19937_64& gen) {
  const Matrix a = random_ginibre(dim, gen);
  Eigen::HouseholderQR<Matrix> qr(a);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < dim; ++i) {
    const Complex d = r(i, i) / std::abs(r(i, i));
    q.col(i) *= d;
  }
  return q;
}

inline Matrix random_density(int dim, std::mt19937_64& gen) {
  const Matrix a = random_ginibre(dim, gen);
  Matrix rho = a * a.adjoint();
  rho /= rho.trace().real();
  return rho;
}

inline Matrix random_pure(int dim, std::mt19937_64& gen) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector psi(dim);
  for (int i = 0; i < dim; ++i) psi(i) = Complex(n(gen), n(gen));
  psi.normalize();
  return psi * psi.adjoint();
}

// Random GKLS generator in superoperator form: random Hermitian Hamiltonian
// plus one or two random jump channels with positive rates.
inline Matrix random_gkls_superop(int dim, std::mt19937_64& gen,
                                  double h_scale = 1.0, double rate_scale = 0.5) {
  std::uniform_real_distribution<double> u(0.1, 1.0);
  const Matrix h = random_hermitian(dim, gen, h_scale);
  std::vector<Matrix> jumps;
  std::vector<double> rates;
  const int n_jumps = 1 + static_cast<int>(gen() % 2);
  for (int j = 0; j < n_jumps; ++j) {
    jumps.push_back(random_ginibre(dim, gen) / std::sqrt(2.0 * dim));
    rates.push_back(rate_scale * u(gen));
  }
  return oqctrl::Superoperator::hamiltonian_part(h).m +
         oqctrl::Superoperator::dissipator_part(jumps, rates).m;
}

// Taylor-series matrix exponential with scaling and squaring; independent of
// every propagator in the library.
inline Matrix taylor_expm(const Matrix& a) {
  const double norm = a.cwiseAbs().rowwise().sum().maxCoeff();
  int s = 0;
  double scale = 1.0;
  while (norm * scale > 0.25) {
    scale *= 0.5;
    ++s;
  }
  const int n = static_cast<int>(a.rows());
  Matrix x = scale * a;
  Matrix term = Matrix::Identity(n, n);
  Matrix acc = Matrix::Identity(n, n);
  for (int k = 1; k <= 40; ++k) {
    term = (x * term) / static_cast<double>(k);
    acc += term;
    if (term.cwiseAbs().maxCoeff() < 1e-22) break;
  }
  for (int k = 0; k < s; ++k) acc = acc * acc;
  return acc;
}

// exp(-i H t) through an eigendecomposition (Hermitian H).
inline Matrix eig_expm_unitary(const Matrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  Vector phases(es.eigenvalues().size());
  for (int i = 0; i < phases.size(); ++i)
    phases(i) = std::exp(Complex(0, -es.eigenvalues()(i) * t));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

// Composite Simpson quadrature on [a, b].
template <typename F>
double simpson(F f, double a, double b, int n_half) {
  const int n = 2 * n_half;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int k = 1; k < n; ++k) acc += f(a + k * h) * (k % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

}  // namespace testsup
