#include "oqctrl/dissipator.hpp"

#include <algorithm>
#include <cmath>

#include "oqctrl/errors.hpp"

namespace oqctrl {

BathSpec::BathSpec(double temperature, double ohmic_scale, double coupling,
                   Operator coupling_op)
    : temperature(temperature),
      ohmic_scale(ohmic_scale),
      coupling(coupling),
      coupling_op(std::move(coupling_op)) {
  if (!(temperature > 0.0)) throw ContractViolation("BathSpec: temperature must be > 0");
  if (g2c() < 0.0) throw ContractViolation("BathSpec: g^2 c must be >= 0");
  if (!this->coupling_op.hermitian())
    throw ContractViolation("BathSpec: coupling operator must be Hermitian");
}

BathSpec BathSpec::ohmic(double temperature, double g2c, Operator coupling_op) {
  return BathSpec(temperature, g2c, 1.0, std::move(coupling_op));
}

Operator default_coupling_operator(const ModelSpec& spec) {
  if (spec.kind == ModelKind::SpinJ) return angular_momentum(spec.dim, Axis::Y);
  const Matrix sy = pauli(Axis::Y);
  const Matrix id = identity(2);
  return Operator(tensor(id, sy) + tensor(sy, id));
}

double kinetic_coefficient(double omega, const BathSpec& bath, RateDirection dir) {
  if (!(bath.temperature > 0.0)) throw ContractViolation("kinetic_coefficient: T <= 0");
  if (omega == 0.0) return 0.0;
  if (omega < 0.0)
    return kinetic_coefficient(-omega, bath,
                               dir == RateDirection::Up ? RateDirection::Down
                                                        : RateDirection::Up);
  const double x = omega / bath.temperature;
  const double scale = bath.g2c() * omega * omega * omega;
  if (dir == RateDirection::Up) {
    const double denom = std::expm1(x);  // e^x - 1, overflow -> rate 0
    return std::isinf(denom) ? 0.0 : scale / denom;
  }
  return scale / (-std::expm1(-x));  // scale * (N + 1)
}

double gamma_rate(double omega, const BathSpec& bath) {
  return kinetic_coefficient(omega, bath, RateDirection::Up);
}

CouplingExpansion expand_coupling(const Matrix& coupling_op,
                                  const EigenOperatorSet& ops) {
  const int d = static_cast<int>(coupling_op.rows());
  if (static_cast<int>(ops.ops.size()) != d * d)
    throw ContractViolation("expand_coupling: eigenoperator set is incomplete");
  CouplingExpansion ex;
  ex.coeffs.resize(ops.ops.size());
  ex.eta.resize(static_cast<int>(ops.ops.size()));
  ex.lambda_phase.resize(static_cast<int>(ops.ops.size()));
  Matrix recon = Matrix::Zero(d, d);
  for (size_t j = 0; j < ops.ops.size(); ++j) {
    const Complex c = (ops.ops[j].adjoint() * coupling_op).trace();
    ex.coeffs[j] = c;
    ex.eta(static_cast<int>(j)) = std::abs(c);
    ex.lambda_phase(static_cast<int>(j)) = -std::arg(c);
    recon += c * ops.ops[j];
  }
  if ((recon - coupling_op).cwiseAbs().maxCoeff() > 1e-10)
    throw ContractViolation("expand_coupling: reconstruction failed, ops not complete");
  return ex;
}

Matrix GKLSGenerator::apply(const Matrix& rho) const {
  Matrix out = Complex(0, -1) * (hamiltonian * rho - rho * hamiltonian);
  for (size_t j = 0; j < jumps.size(); ++j) {
    if (rates[j] == 0.0) continue;
    const Matrix& f = jumps[j];
    const Matrix fdf = f.adjoint() * f;
    out += rates[j] * (f * rho * f.adjoint() - 0.5 * (fdf * rho + rho * fdf));
  }
  return out;
}

Superoperator GKLSGenerator::superop() const {
  Superoperator l = Superoperator::hamiltonian_part(hamiltonian);
  bool any = false;
  for (double r : rates)
    if (r != 0.0) any = true;
  if (any) l.m += Superoperator::dissipator_part(jumps, rates).m;
  return l;
}

GKLSGenerator assemble_generator(const Matrix& hamiltonian,
                                 const EigenOperatorSet& ops, const BathSpec& bath,
                                 RateMode mode) {
  GKLSGenerator gen;
  gen.hamiltonian = hamiltonian;
  gen.jumps = ops.ops;
  gen.rates.resize(ops.ops.size(), 0.0);

  CouplingExpansion ex;
  if (mode == RateMode::Appendix) ex = expand_coupling(bath.coupling_op.mat(), ops);

  for (size_t j = 0; j < ops.ops.size(); ++j) {
    const int n = static_cast<int>(j) / ops.dim;
    const int m = static_cast<int>(j) % ops.dim;
    if (n == m) continue;  // dephasing channels: Ohmic rate is exactly 0
    double rate = gamma_rate(ops.omegas(static_cast<int>(j)), bath);
    if (mode == RateMode::Appendix) {
      const double eta = ex.eta(static_cast<int>(j));
      rate *= eta * eta;
    }
    if (rate < 0.0)
      throw PropagationError("assemble_generator: negative kinetic coefficient");
    gen.rates[j] = rate;
  }
  return gen;
}

Matrix instantaneous_attractor(const GKLSGenerator& gen) {
  const Superoperator l = gen.superop();
  Eigen::ComplexEigenSolver<Matrix> solver(l.m);
  if (solver.info() != Eigen::Success)
    throw PropagationError("instantaneous_attractor: eigensolver failed");
  const Vector& vals = solver.eigenvalues();
  int i_min = 0, i_second = -1;
  for (int i = 1; i < vals.size(); ++i) {
    if (std::abs(vals(i)) < std::abs(vals(i_min))) {
      i_second = i_min;
      i_min = i;
    } else if (i_second < 0 || std::abs(vals(i)) < std::abs(vals(i_second))) {
      i_second = i;
    }
  }
  const double smallest = std::abs(vals(i_min));
  const double second = std::abs(vals(i_second));
  if (second <= 1e3 * smallest) {
    int kernel_dim = 0;
    for (int i = 0; i < vals.size(); ++i)
      if (std::abs(vals(i)) <= 1e3 * std::max(smallest, 1e-300)) ++kernel_dim;
    throw AttractorMultiplicityError(
        "instantaneous_attractor: degenerate kernel, no unique steady state",
        kernel_dim);
  }

  const int d = gen.dim();
  Matrix rho = unvec(solver.eigenvectors().col(i_min), d);
  // The kernel vector carries an arbitrary global phase; align it so the
  // trace is real positive before symmetrizing.
  const Complex tr0 = rho.trace();
  if (std::abs(tr0) < 1e-10)
    throw PropagationError("instantaneous_attractor: traceless kernel vector");
  rho *= std::conj(tr0) / std::abs(tr0);
  rho = 0.5 * (rho + rho.adjoint());
  rho /= rho.trace().real();

  Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
  if (es.eigenvalues().minCoeff() < -1e-10)
    throw PropagationError("instantaneous_attractor: kernel state not positive");
  if (gen.apply(rho).cwiseAbs().maxCoeff() > 1e-9)
    throw PropagationError("instantaneous_attractor: residual too large");
  return rho;
}

}  // namespace oqctrl
