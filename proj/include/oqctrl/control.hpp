#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "oqctrl/dissipator.hpp"
#include "oqctrl/eigenflow.hpp"
#include "oqctrl/operators.hpp"
#include "oqctrl/propagation.hpp"
#include "oqctrl/thermo.hpp"

namespace oqctrl {

/// CRAB control field: a Gaussian envelope centered at tau/2 times a
/// truncated randomized sine series,
///   eps(t) = exp(-((t - tau/2) / (2 sigma))^2) sum_k c_k sin(nu_k t).
struct ControlField {
  double tau = 0.0;
  double sigma = 0.0;
  Eigen::VectorXd freqs;
  Eigen::VectorXd coeffs;

  double operator()(double t) const;

  /// Evaluations clamped into [0, tau] since process start (diagnostic).
  static long clamped_evaluations();
};

enum class ObjectiveKind { MaxEntropy, MinEntropy, StateOverlap, MapOverlap };

/// What the protocol should reach: an entropy extremum of a single probe, or
/// pure targets for a (complete) probe set.
struct Objective {
  ObjectiveKind kind = ObjectiveKind::MaxEntropy;
  std::vector<Matrix> probes;
  std::vector<Matrix> targets;  // overlap objectives only, one per probe
};

/// Normalized deviation to be minimized: ln N - S, S, or 1 - J/K with
/// J = sum_k tr(rho_final_k target_k).
double objective_value(const Objective& obj, const std::vector<Matrix>& finals);
/// Raw overlap sum J (overlap objectives; 0 for entropy objectives).
double raw_overlap(const Objective& obj, const std::vector<Matrix>& finals);

enum class ProbeKind { Qubit, TwoQubit };

/// Informationally complete pure probe sets: {|0>,|1>,|+>,|+i>} projectors,
/// or their 16 two-qubit products.
std::vector<Matrix> probe_set(ProbeKind kind);

/// Model + optional bath + grid; the unit every protocol run needs.
struct Scenario {
  ModelSpec model;
  std::optional<BathSpec> bath;
  RateMode rate_mode = RateMode::Appendix;
  TimeGrid grid;
  Matrix h0;
  Matrix v;

  Matrix hamiltonian_at(double field_value) const { return h0 + field_value * v; }
};

Scenario make_scenario(const ModelSpec& model, std::optional<BathSpec> bath,
                       RateMode rate_mode, double tau, int n_steps);

struct TrajectoryPoint {
  double t = 0.0;
  double field = 0.0;
  double objective = 0.0;  // instantaneous deviation from the objective
  ThermoSample thermo;
};

struct CptpStats {
  double max_trace_defect = 0.0;
  double max_herm_defect = 0.0;
  double min_eigenvalue = 1.0;
};

struct RecordOptions {
  bool record = false;
  int probe_index = 0;
  bool monitor_cptp = false;
};

struct ProtocolResult {
  std::vector<Matrix> finals;
  std::vector<TrajectoryPoint> trajectory;
  CptpStats cptp;
  double min_label_overlap = 1.0;
  double field_energy = 0.0;  // integral of eps^2 over [0, tau]
};

/// Execute one protocol: Chebychev propagation of U_S on a half-resolution
/// grid, eigenoperator flow, per-step GKLS assembly at the step midpoints and
/// Newton propagation of every probe. Closed scenarios (no bath) conjugate by
/// U_S directly.
ProtocolResult run_protocol(const ControlField& field, const Scenario& scenario,
                            const Objective& obj, const RecordOptions& opts = {});

struct OptimizeConfig {
  int n_modes = 20;
  int restarts = 64;
  std::uint64_t seed = 1;
  int max_evals = 2000;
  double sigma = 0.0;         // envelope width; 0 selects tau / 8
  double amp_penalty = 0.0;   // lambda * integral eps^2
  double stop_value = 1e-12;  // per-restart early exit
  int jobs = 0;               // 0 = hardware concurrency
};

struct OptimizationReport {
  ControlField best_field;
  double best_value = 0.0;
  double best_raw_overlap = 0.0;
  int best_restart = -1;
  std::vector<double> restart_values;
  long total_evals = 0;
  bool converged = false;
};

/// Multi-start quasi-Newton search over the CRAB coefficients. Frequencies
/// are jittered principal harmonics nu_k = (2 pi k / tau)(1 + d_k),
/// d_k ~ U[-0.1, 0.1], drawn per restart from a deterministic per-restart
/// seed; restarts run in parallel and merge deterministically.
OptimizationReport optimize(const Objective& obj, const Scenario& scenario,
                            const OptimizeConfig& config);

/// Transfer matrix in the (I, sx, sy, sz) basis from the images of the four
/// qubit probes (same order as probe_set(Qubit)).
Eigen::Matrix4d transfer_matrix_from_probe_images(const std::vector<Matrix>& finals);

/// Pauli transfer matrix of the qubit map generated by the field: action on
/// the (I, sx, sy, sz) expansion coefficients, reconstructed from the probe
/// set. First row is (1, 0, 0, 0) up to propagation error.
Eigen::Matrix4d map_tomography(const ControlField& field, const Scenario& scenario);

/// pi rotation about (x - z)/sqrt(2); transfer matrix maps
/// (bx, by, bz) -> (-bz, -by, -bx).
Matrix hadamard_gate();
/// Square root of SWAP on two qubits (middle-block mixing).
Matrix sqrt_swap_gate();
/// Reset target: the pure state (I - sx)/2.
Matrix reset_target_state();

}  // namespace oqctrl
