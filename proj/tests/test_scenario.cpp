#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "oqctrl/errors.hpp"
#include "oqctrl/scenario.hpp"
#include "support.hpp"

using namespace oqctrl;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<double>> read_csv(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);  // header
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
      row.push_back(cell.empty() ? std::nan("") : std::strtod(cell.c_str(), nullptr));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("config parsing, defaults and diagnostics") {
  const ScenarioConfig cfg = parse_config_text(
      "spec_version = 1\n"
      "model = spin_j\n"
      "dim = 2\n"
      "delta_au = 3e-3\n"
      "task = heat\n"
      "seed = 9\n");
  CHECK(cfg.dim == 2);
  CHECK(cfg.seed == 9);
  CHECK(effective_tau(cfg) == doctest::Approx(2.0 * M_PI / 3e-3));
  CHECK(effective_sigma(cfg) == doctest::Approx(effective_tau(cfg) / 8.0));
  CHECK(effective_n_steps(cfg) == 200);
  CHECK(effective_threshold(cfg) == doctest::Approx(1e-4));

  // Line/field diagnostics.
  try {
    parse_config_text("task = heat\nnot a kv line\n");
    CHECK(false);
  } catch (const InvalidConfig& e) {
    CHECK(e.line == 2);
  }
  try {
    parse_config_text("task = heat\nbogus_key = 1\n");
    CHECK(false);
  } catch (const InvalidConfig& e) {
    CHECK(e.line == 2);
    CHECK(e.field == "bogus_key");
  }
  CHECK_THROWS_AS(parse_config_text("task = melt\n"), InvalidConfig);
  CHECK_THROWS_AS(parse_config_text("delta_au = hot\n"), InvalidConfig);
  CHECK_THROWS_AS(parse_config_text("task = heat\ntask = cool\n"), InvalidConfig);

  const ScenarioConfig tq = parse_config_text("model = two_qubit\ntask = sqrt_swap\n");
  CHECK(tq.dim == 4);
  const ModelSpec m = model_of(tq);
  CHECK(m.omega1 == doctest::Approx(3e-3));
  CHECK(m.omega2 == doctest::Approx(3.3e-3));
}

TEST_CASE("bath calibration pins the undriven decay rate") {
  const ScenarioConfig cfg = parse_config_text("task = heat\ndim = 2\n");
  const ModelSpec model = model_of(cfg);
  const double target = 1e-4 * model.delta;
  for (RateMode mode : {RateMode::Appendix, RateMode::MainText}) {
    BathSpec raw = BathSpec::ohmic(model.delta, 1e4, default_coupling_operator(model));
    const BathSpec cal = calibrate_bath(model, raw, mode, target);
    CHECK(undriven_decay_rate(model, cal, mode) == doctest::Approx(target).epsilon(1e-12));
  }

  // Main-text rate of the TLS equals the bare coefficient sum at the gap.
  BathSpec raw = BathSpec::ohmic(model.delta, 1e4, default_coupling_operator(model));
  const double want = kinetic_coefficient(model.delta, raw, RateDirection::Up) +
                      kinetic_coefficient(model.delta, raw, RateDirection::Down);
  CHECK(undriven_decay_rate(model, raw, RateMode::MainText) ==
        doctest::Approx(want).epsilon(1e-12));

  // bath_of applies the default target 1e-4 delta.
  const BathSpec b = bath_of(cfg, model);
  CHECK(undriven_decay_rate(model, b, cfg.rate_mode) ==
        doctest::Approx(target).epsilon(1e-12));
}

TEST_CASE("task objectives") {
  const ModelSpec tls = ModelSpec::spin(2, 3e-3);
  const Objective heat = task_objective(Task::Heat, tls);
  CHECK(heat.kind == ObjectiveKind::MaxEntropy);
  REQUIRE(heat.probes.size() == 1);
  const Matrix gibbs = gibbs_state(drift_hamiltonian(tls), 1.0 / tls.delta);
  CHECK((heat.probes[0] - gibbs).cwiseAbs().maxCoeff() < 1e-14);

  const Objective reset = task_objective(Task::Reset, tls);
  REQUIRE(reset.targets.size() == 4);
  for (const Matrix& t : reset.targets)
    CHECK((t - reset_target_state()).cwiseAbs().maxCoeff() == 0.0);

  const Objective had = task_objective(Task::Hadamard, tls);
  const Matrix u = hadamard_gate();
  for (size_t k = 0; k < had.probes.size(); ++k)
    CHECK((had.targets[k] - u * had.probes[k] * u.adjoint()).cwiseAbs().maxCoeff() <
          1e-14);

  const ModelSpec tq = ModelSpec::two_qubit(3e-3, 3e-3, 3.3e-3);
  const Objective swap = task_objective(Task::SqrtSwap, tq);
  CHECK(swap.probes.size() == 16);
  CHECK_THROWS_AS(task_objective(Task::SqrtSwap, tls), ContractViolation);
  CHECK_THROWS_AS(task_objective(Task::Reset, tq), ContractViolation);
}

TEST_CASE("field json round trip is exact") {
  ScenarioConfig cfg = parse_config_text("task = heat\n");
  cfg.out_dir = "test_out_field";
  ensure_dir(cfg.out_dir);
  ControlField f;
  f.tau = 2094.3951023931954;
  f.sigma = f.tau / 8.0;
  f.freqs = Eigen::VectorXd::Random(5);
  f.coeffs = Eigen::VectorXd::Random(5);
  const std::string path = cfg.out_dir + "/field.json";
  write_field_json(path, cfg, f, 321);
  int n_steps = 0;
  const ControlField g = read_field_json(path, &n_steps);
  CHECK(n_steps == 321);
  CHECK(g.tau == f.tau);
  CHECK(g.sigma == f.sigma);
  CHECK((g.freqs - f.freqs).cwiseAbs().maxCoeff() == 0.0);
  CHECK((g.coeffs - f.coeffs).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("optimize command: artifacts, replay, determinism, exit codes") {
  const char* base_cfg =
      "task = heat\n"
      "dim = 2\n"
      "n_modes = 2\n"
      "restarts = 2\n"
      "max_evals = 30\n"
      "n_steps = 80\n"
      "seed = 11\n"
      "jobs = 2\n";
  ScenarioConfig cfg = parse_config_text(base_cfg);
  cfg.out_dir = "test_out_a";
  const CommandResult res = cmd_optimize(cfg);
  CHECK((res.exit_code == 0 || res.exit_code == 2));

  // Determinism: a second run writes byte-identical artifacts.
  ScenarioConfig cfg2 = parse_config_text(base_cfg);
  cfg2.out_dir = "test_out_b";
  cmd_optimize(cfg2);
  CHECK(slurp("test_out_a/summary.json") == slurp("test_out_b/summary.json"));
  CHECK(slurp("test_out_a/field.json") == slurp("test_out_b/field.json"));
  CHECK(slurp("test_out_a/trajectory.csv") == slurp("test_out_b/trajectory.csv"));

  // Replay reproduces the stored trajectory pointwise.
  ScenarioConfig sim = parse_config_text(base_cfg);
  sim.out_dir = "test_out_sim";
  cmd_simulate(sim, "test_out_a/field.json");
  const auto a = read_csv("test_out_a/trajectory.csv");
  const auto b = read_csv("test_out_sim/trajectory.csv");
  REQUIRE(a.size() == b.size());
  for (size_t r = 0; r < a.size(); ++r) {
    REQUIRE(a[r].size() == b[r].size());
    for (size_t c = 0; c < a[r].size(); ++c) {
      if (std::isnan(a[r][c])) {
        CHECK(std::isnan(b[r][c]));
      } else {
        CHECK(std::abs(a[r][c] - b[r][c]) <= 1e-10 * (1.0 + std::abs(a[r][c])));
      }
    }
  }

  // Exit codes: an absurdly loose threshold passes, an impossible one fails.
  ScenarioConfig loose = parse_config_text(base_cfg);
  loose.threshold = 10.0;
  loose.out_dir = "test_out_loose";
  CHECK(cmd_optimize(loose).exit_code == 0);
  ScenarioConfig tight = parse_config_text(base_cfg);
  tight.threshold = 1e-15;
  tight.out_dir = "test_out_tight";
  CHECK(cmd_optimize(tight).exit_code == 2);
}

TEST_CASE("trajectory csv columns") {
  ScenarioConfig cfg = parse_config_text(
      "task = heat\nn_modes = 2\nrestarts = 1\nmax_evals = 10\nn_steps = 50\n");
  cfg.out_dir = "test_out_csv";
  cmd_optimize(cfg);
  std::ifstream in("test_out_csv/trajectory.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header ==
        "t,field,entropy,sigma_rate,sigma_acc,infidelity,bx,by,bz,gen_purity");
  const auto rows = read_csv("test_out_csv/trajectory.csv");
  REQUIRE(rows.size() == 51);
  for (const auto& row : rows) {
    REQUIRE(row.size() >= 9);
    CHECK_FALSE(std::isnan(row[6]));  // Bloch columns filled for a qubit
  }
  // Time strictly increasing, accumulated entropy production non-decreasing.
  for (size_t r = 1; r < rows.size(); ++r) {
    CHECK(rows[r][0] > rows[r - 1][0]);
    CHECK(rows[r][4] >= rows[r - 1][4] - 1e-8);
  }
}
