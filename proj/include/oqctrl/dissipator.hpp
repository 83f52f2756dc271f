#pragma once

#include <vector>

#include "oqctrl/eigenflow.hpp"
#include "oqctrl/operators.hpp"
#include "oqctrl/propagation.hpp"

namespace oqctrl {

/// Ohmic bath: spectral density J(w) = c w^2, coupling strength g, coupling
/// operator S. Temperature in a.u. with k_B = 1.
struct BathSpec {
  double temperature = 0.0;
  double ohmic_scale = 0.0;  // c
  double coupling = 1.0;     // g
  Operator coupling_op;

  BathSpec(double temperature, double ohmic_scale, double coupling,
           Operator coupling_op);

  /// Bath with the stated g^2 c product (the combination the rates depend on).
  static BathSpec ohmic(double temperature, double g2c, Operator coupling_op);

  double g2c() const { return coupling * coupling * ohmic_scale; }
};

/// Default system-bath coupling operator of a model: J_y for the spin chain,
/// the summed single-qubit y operators for the two-qubit register.
Operator default_coupling_operator(const ModelSpec& spec);

enum class RateDirection { Up, Down };

/// Ohmic kinetic coefficient at Bohr frequency omega:
/// k_up = g^2 c w^3 N(w), k_down = k_up e^{w/T} (detailed balance), with both
/// rates -> 0 continuously as w -> 0. Negative omega swaps the roles.
double kinetic_coefficient(double omega, const BathSpec& bath, RateDirection dir);

/// Rate attached to an eigenoperator with signed Bohr frequency omega:
/// raising transitions (omega > 0) absorb at k_up, lowering ones emit at
/// k_down(|omega|). Zero at omega = 0 (Ohmic dephasing limit).
double gamma_rate(double omega, const BathSpec& bath);

/// Expansion of the coupling operator in the instantaneous eigenoperators,
/// c_k = tr(F_k^dag S) = eta_k exp(-i lambda_k).
struct CouplingExpansion {
  std::vector<Complex> coeffs;
  RealVector eta;           // |c_k|
  RealVector lambda_phase;  // -arg(c_k)
};

CouplingExpansion expand_coupling(const Matrix& coupling_op,
                                  const EigenOperatorSet& ops);

enum class RateMode { MainText, Appendix };

/// Time-local GKLS generator: -i[H, .] + sum_j gamma_j D[F_j].
struct GKLSGenerator {
  Matrix hamiltonian;
  std::vector<Matrix> jumps;
  std::vector<double> rates;

  int dim() const { return static_cast<int>(hamiltonian.rows()); }
  Matrix apply(const Matrix& rho) const;
  Superoperator superop() const;
};

/// Assemble the generator at one time step from the instantaneous
/// eigenoperators and the bath. MainText weights every channel by the bare
/// kinetic coefficient at its Bohr frequency; Appendix additionally weights
/// by eta_j^2 from the coupling-operator expansion.
GKLSGenerator assemble_generator(const Matrix& hamiltonian,
                                 const EigenOperatorSet& ops, const BathSpec& bath,
                                 RateMode mode);

/// Unique density matrix annihilated by the generator. Throws
/// AttractorMultiplicityError when the kernel is degenerate (uniqueness gate:
/// the second-smallest eigenvalue magnitude must exceed 1e3x the smallest).
Matrix instantaneous_attractor(const GKLSGenerator& gen);

}  // namespace oqctrl
