#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "oqctrl/control.hpp"

namespace oqctrl {

enum class Task { Heat, Cool, Reset, Hadamard, SqrtSwap };
enum class Scheme { Closed, ClosedFieldOnOpen, Open };

/// One run's worth of settings, as parsed from a key = value config file.
/// Unset numeric fields (<= 0 where noted) pick task-dependent defaults.
struct ScenarioConfig {
  int spec_version = 1;
  ModelKind model_kind = ModelKind::SpinJ;
  int dim = 2;
  double delta_au = 3e-3;
  double omega1_au = 0.0;        // two_qubit; default delta
  double omega2_au = 0.0;        // two_qubit; default 1.1 delta
  double temperature_au = 0.0;   // default delta
  double g2c_au = 1e4;
  double gamma_target_au = -1.0;  // default 1e-4 * delta; 0 disables calibration
  RateMode rate_mode = RateMode::Appendix;
  Task task = Task::Heat;
  Scheme scheme = Scheme::Open;
  double tau_au = 0.0;    // default 2 pi / delta
  double sigma_au = 0.0;  // default tau / 8
  int n_modes = 20;
  int restarts = 64;
  std::uint64_t seed = 1;
  int max_evals = 2000;
  int n_steps = 0;        // default 200 per 2 pi / delta period
  double threshold = -1.0;  // default per task
  double amp_penalty = 0.0;
  int record_probe = -1;  // default per task
  int jobs = 0;
  std::string out_dir = "out";
};

ScenarioConfig parse_config_text(const std::string& text);
ScenarioConfig parse_config_file(const std::string& path);

Task task_from_name(const std::string& name);
std::string task_name(Task task);
Scheme scheme_from_name(const std::string& name);
std::string scheme_name(Scheme scheme);
std::string rate_mode_name(RateMode mode);
RateMode rate_mode_from_name(const std::string& name);

ModelSpec model_of(const ScenarioConfig& cfg);
double effective_tau(const ScenarioConfig& cfg);
double effective_sigma(const ScenarioConfig& cfg);
int effective_n_steps(const ScenarioConfig& cfg);
double effective_threshold(const ScenarioConfig& cfg);
int effective_record_probe(const ScenarioConfig& cfg);
/// Tighter precision recorded alongside the desk threshold (<= 0 when none).
double stretch_threshold(Task task);

/// Sum of the kinetic coefficients of the dominant conjugate eigenoperator
/// pair of the undriven generator; the calibration reference Gamma.
double undriven_decay_rate(const ModelSpec& model, const BathSpec& bath,
                           RateMode mode);

/// Rescale the Ohmic constant so the undriven decay rate equals gamma_target
/// (no-op when gamma_target <= 0).
BathSpec calibrate_bath(const ModelSpec& model, const BathSpec& bath,
                        RateMode mode, double gamma_target);

/// Bath built from the config (model default coupling operator), calibrated.
BathSpec bath_of(const ScenarioConfig& cfg, const ModelSpec& model);

/// Probes and targets of a named control task.
Objective task_objective(Task task, const ModelSpec& model);

/// Scenario for one scheme: Closed drops the bath, the other schemes carry it.
Scenario scenario_for(const ScenarioConfig& cfg, Scheme scheme);

struct CommandResult {
  int exit_code = 0;
  double best_value = 0.0;
};

CommandResult cmd_optimize(const ScenarioConfig& cfg);
CommandResult cmd_simulate(const ScenarioConfig& cfg, const std::string& field_path);
CommandResult cmd_compare_schemes(const ScenarioConfig& cfg);
CommandResult cmd_freq_study(const ScenarioConfig& cfg, const std::vector<int>& m_list,
                             const std::vector<int>& dims);
CommandResult cmd_sweep_coupling(const ScenarioConfig& cfg,
                                 const std::vector<double>& gammas);
CommandResult cmd_tomography(const ScenarioConfig& cfg, const std::string& field_path);

// Artifact I/O (artifacts.cpp).
void write_trajectory_csv(const std::string& path,
                          const std::vector<TrajectoryPoint>& traj);
void write_field_json(const std::string& path, const ScenarioConfig& cfg,
                      const ControlField& field, int n_steps);
ControlField read_field_json(const std::string& path, int* n_steps_out);
void write_summary_json(const std::string& path, const std::string& json_text);
std::string ensure_dir(const std::string& dir);

}  // namespace oqctrl
