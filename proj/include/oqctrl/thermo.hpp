#pragma once

#include <optional>
#include <span>
#include <vector>

#include "oqctrl/dissipator.hpp"
#include "oqctrl/operators.hpp"

namespace oqctrl {

/// Thermodynamic diagnostics of one trajectory point.
struct ThermoSample {
  double t = 0.0;
  double entropy = 0.0;          // nats
  double sigma_rate = 0.0;       // entropy production rate, nats/time
  double sigma_accumulated = 0.0;
  double purity = 1.0;
  std::optional<Eigen::Vector3d> bloch;   // qubit only
  std::optional<double> gen_purity;       // two-qubit only
};

/// Von Neumann entropy -tr(rho ln rho) in nats, with the 0 ln 0 -> 0 limit.
/// Rejects inputs whose trace deviates from 1 by more than 1e-6 or whose
/// spectrum dips below -1e-8.
double entropy(const Matrix& rho);

/// tr(rho (ln rho - ln sigma)) with the same 1e-14 spectral floor.
double relative_entropy(const Matrix& rho, const Matrix& sigma);

/// Entropy production rate -tr(L[rho] ln rho) + tr(L[rho] ln rho_ia) with the
/// generator's own instantaneous attractor; zero at rho = rho_ia.
double entropy_production_rate(const Matrix& rho, const GKLSGenerator& gen);
double entropy_production_rate(const Matrix& rho, const GKLSGenerator& gen,
                               const Matrix& attractor);

/// Trapezoid integral of per-node rates on a uniform grid.
double accumulate_entropy_production(std::span<const double> rates, double dt);

double purity(const Matrix& rho);

/// (tr(rho sx), tr(rho sy), tr(rho sz)) for a qubit state.
Eigen::Vector3d bloch_vector(const Matrix& rho);
/// Inverse map, (I + b.sigma)/2.
Matrix bloch_state(const Eigen::Vector3d& b);

/// Purity of the projection onto the exchange-subspace SU(2) algebra of two
/// qubits (basis states 1 and 2), normalized so pure subspace states score 1.
double generalized_purity(const Matrix& rho);

}  // namespace oqctrl
