#include <doctest.h>

#include <cmath>

#include "oqctrl/control.hpp"
#include "oqctrl/errors.hpp"
#include "oqctrl/optimizer.hpp"
#include "support.hpp"

using namespace oqctrl;

namespace {

ControlField single_mode(double tau, double sigma, double nu, double c) {
  ControlField f;
  f.tau = tau;
  f.sigma = sigma;
  f.freqs = Eigen::VectorXd::Constant(1, nu);
  f.coeffs = Eigen::VectorXd::Constant(1, c);
  return f;
}

Scenario tls_scenario(bool open, double tau_periods = 1.0, int n_steps = 200,
                      double g2c = 1e4) {
  const double delta = 3e-3;
  const ModelSpec model = ModelSpec::spin(2, delta);
  std::optional<BathSpec> bath;
  if (open)
    bath = BathSpec::ohmic(delta, g2c, default_coupling_operator(model));
  return make_scenario(model, std::move(bath), RateMode::Appendix,
                       tau_periods * 2.0 * M_PI / delta, n_steps);
}

}  // namespace

TEST_CASE("CRAB field evaluation") {
  const double tau = 100.0, sigma = tau / 8.0;
  const ControlField f = single_mode(tau, sigma, 0.3, 1.0);
  CHECK(f(0.0) == doctest::Approx(0.0));  // every sine vanishes at t = 0
  CHECK(f(tau / 2.0) == doctest::Approx(std::sin(0.3 * tau / 2.0)).epsilon(1e-14));

  ControlField zero = f;
  zero.coeffs.setZero();
  for (double t : {0.0, 13.0, 50.0, 99.0}) CHECK(zero(t) == 0.0);

  // Envelope value away from the center.
  const double t = 20.0;
  const double env = std::exp(-std::pow((t - tau / 2) / (2.0 * sigma), 2));
  CHECK(f(t) == doctest::Approx(env * std::sin(0.3 * t)).epsilon(1e-14));

  ControlField bad = f;
  bad.sigma = 0.0;
  CHECK_THROWS_AS(bad(1.0), ContractViolation);
}

TEST_CASE("objective values") {
  Objective heat;
  heat.kind = ObjectiveKind::MaxEntropy;
  heat.probes = {0.5 * identity(2)};
  CHECK(objective_value(heat, {0.5 * identity(2)}) == doctest::Approx(0.0).epsilon(1e-12));

  Objective map;
  map.kind = ObjectiveKind::MapOverlap;
  map.probes = probe_set(ProbeKind::Qubit);
  map.targets = map.probes;
  CHECK(objective_value(map, map.probes) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(raw_overlap(map, map.probes) == doctest::Approx(4.0).epsilon(1e-12));

  // One probe sent to the orthogonal state contributes 1/K.
  std::vector<Matrix> finals = map.probes;
  finals[0] = map.probes[1];
  CHECK(objective_value(map, finals) == doctest::Approx(0.25).epsilon(1e-12));

  finals.pop_back();
  CHECK_THROWS_AS(objective_value(map, finals), ContractViolation);
}

TEST_CASE("probe sets are pure and informationally complete") {
  const auto qubit = probe_set(ProbeKind::Qubit);
  REQUIRE(qubit.size() == 4);
  Eigen::MatrixXcd gram(4, 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(std::abs((qubit[i] * qubit[i]).trace().real() - 1.0) < 1e-14);
    for (int j = 0; j < 4; ++j) gram(i, j) = (qubit[i].adjoint() * qubit[j]).trace();
  }
  CHECK(Eigen::FullPivLU<Eigen::MatrixXcd>(gram).rank() == 4);

  const auto two = probe_set(ProbeKind::TwoQubit);
  REQUIRE(two.size() == 16);
  for (const Matrix& p : two)
    CHECK(std::abs((p * p).trace().real() - 1.0) < 1e-13);
}

TEST_CASE("run_protocol: stationarity, closed purity, relaxation") {
  const Scenario open = tls_scenario(true);
  const ControlField zero = single_mode(open.grid.t1, open.grid.t1 / 8.0, 0.1, 0.0);

  // Gibbs probe stays put under zero field.
  Objective gibbs_obj;
  gibbs_obj.kind = ObjectiveKind::MaxEntropy;
  const Matrix gibbs = gibbs_state(Operator(open.h0), 1.0 / open.model.delta);
  gibbs_obj.probes = {gibbs};
  const ProtocolResult stay = run_protocol(zero, open, gibbs_obj);
  CHECK((stay.finals[0] - gibbs).cwiseAbs().maxCoeff() < 1e-8);

  // Closed scenario preserves purity for any field.
  const Scenario closed = tls_scenario(false);
  auto gen = testsup::rng(149);
  Objective pure_obj;
  pure_obj.kind = ObjectiveKind::MaxEntropy;
  pure_obj.probes = {testsup::random_pure(2, gen)};
  const ControlField wiggle = single_mode(closed.grid.t1, closed.grid.t1 / 8.0,
                                          7.0 * closed.model.delta,
                                          2.0 * closed.model.delta);
  const ProtocolResult closed_run = run_protocol(wiggle, closed, pure_obj);
  CHECK(std::abs(purity(closed_run.finals[0]) - 1.0) < 1e-10);

  // Excited state relaxes toward Gibbs monotonically under zero field.
  const Scenario relax = tls_scenario(true, 6.0, 600);
  Eigen::SelfAdjointEigenSolver<Matrix> es(relax.h0);
  Objective excited;
  excited.kind = ObjectiveKind::MaxEntropy;
  excited.probes = {es.eigenvectors().col(1) * es.eigenvectors().col(1).adjoint()};
  RecordOptions rec;
  rec.record = true;
  const ControlField zero6 = single_mode(relax.grid.t1, relax.grid.t1 / 8.0, 0.1, 0.0);
  const ProtocolResult traj = run_protocol(zero6, relax, excited, rec);
  auto dist = [&](const Matrix& a) {
    Eigen::SelfAdjointEigenSolver<Matrix> d(a - gibbs);
    return 0.5 * d.eigenvalues().cwiseAbs().sum();
  };
  // Sample the recorded entropy for sanity and check the end points directly.
  CHECK(traj.trajectory.front().thermo.entropy < 1e-8);
  CHECK(dist(traj.finals[0]) < dist(excited.probes[0]));
  CHECK(traj.trajectory.back().thermo.sigma_accumulated >= -1e-8);
}

TEST_CASE("undriven relaxation follows the closed-form rates") {
  // Populations decay at Gamma = gamma_up + gamma_down, coherences at
  // Gamma / 2; an undriven run must reproduce both decay laws.
  const double delta = 3e-3;
  const ModelSpec model = ModelSpec::spin(2, delta);
  const BathSpec bath = BathSpec::ohmic(delta, 1e4, default_coupling_operator(model));
  Eigen::SelfAdjointEigenSolver<Matrix> es(drift_hamiltonian(model).mat());
  const double k_up = kinetic_coefficient(delta, bath, RateDirection::Up);
  const double k_down = kinetic_coefficient(delta, bath, RateDirection::Down);
  const double eta2 = 0.25;  // |<e|J_y|g>|^2 for the J_y coupling
  const double gamma = eta2 * (k_up + k_down);

  const double tau = 3.0 / gamma;
  Scenario sc = make_scenario(model, bath, RateMode::Appendix, tau, 4000);

  // Generic state with coherence in the energy eigenbasis.
  const Matrix& v = es.eigenvectors();
  Matrix rho0 = Matrix::Zero(2, 2);
  rho0 += 0.85 * v.col(1) * v.col(1).adjoint() + 0.15 * v.col(0) * v.col(0).adjoint();
  rho0 += 0.3 * (v.col(0) * v.col(1).adjoint() + v.col(1) * v.col(0).adjoint());
  Objective obj;
  obj.kind = ObjectiveKind::MaxEntropy;
  obj.probes = {rho0};
  const ControlField zero = single_mode(tau, tau / 8.0, 0.1, 0.0);
  const ProtocolResult res = run_protocol(zero, sc, obj);

  const Complex coh = (v.col(0).adjoint() * res.finals[0] * v.col(1))(0);
  CHECK(std::abs(coh) ==
        doctest::Approx(0.3 * std::exp(-0.5 * gamma * tau)).epsilon(1e-2));
  const double p_exc = (v.col(1).adjoint() * res.finals[0] * v.col(1))(0).real();
  const double p_eq = k_up / (k_up + k_down);
  const double want = p_eq + (0.85 - p_eq) * std::exp(-gamma * tau);
  CHECK(p_exc == doctest::Approx(want).epsilon(1e-4));
}

TEST_CASE("schrodinger and interaction pictures agree") {
  // Interaction-picture reference: the dissipator alone (same jump
  // operators and rates) propagates the rotated state, mapped back by U.
  const Scenario sc = tls_scenario(true, 1.0, 800);
  const ControlField field = single_mode(sc.grid.t1, sc.grid.t1 / 8.0,
                                         5.0 * sc.model.delta, sc.model.delta);
  Objective obj;
  obj.kind = ObjectiveKind::MaxEntropy;
  auto gen = testsup::rng(151);
  obj.probes = {testsup::random_density(2, gen)};
  const ProtocolResult direct = run_protocol(field, sc, obj);

  const int n = sc.grid.n_steps;
  const TimeGrid half(0.0, sc.grid.t1, 2 * n);
  auto h_of_t = [&](double t) { return sc.hamiltonian_at(field(t)); };
  const auto us = propagate_unitary(h_of_t, half, 2);
  const EigenFlow flow = EigenFlow::build(us, sc.hamiltonian_at(0.0), half.dt());
  Matrix rho_tilde = obj.probes[0];
  for (int k = 0; k < n; ++k) {
    const GKLSGenerator g = assemble_generator(
        sc.hamiltonian_at(field(sc.grid.node(k) + 0.5 * sc.grid.dt())),
        flow.ops_at(2 * k + 1), *sc.bath, sc.rate_mode);
    GKLSGenerator dissipator_only = g;
    dissipator_only.hamiltonian = Matrix::Zero(2, 2);
    rho_tilde = step_density(dissipator_only.superop().m, sc.grid.dt(), rho_tilde);
  }
  const Matrix via_ip = us.back() * rho_tilde * us.back().adjoint();
  CHECK((via_ip - direct.finals[0]).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("midpoint discretization converges at second order") {
  const ControlField field = single_mode(100.0, 12.5, 0.21, 0.02);
  const ModelSpec model = ModelSpec::spin(2, 3e-3);
  Objective obj;
  obj.kind = ObjectiveKind::MaxEntropy;
  auto gen = testsup::rng(157);
  obj.probes = {testsup::random_density(2, gen)};

  auto finals_with = [&](int n_steps) {
    Scenario sc = make_scenario(model, BathSpec::ohmic(3e-3, 1e4,
                                                       default_coupling_operator(model)),
                                RateMode::Appendix, 100.0, n_steps);
    return run_protocol(field, sc, obj).finals[0];
  };
  // Oracle: adaptive integration of the same generator pipeline is not
  // available (the generator is grid-sampled), so compare against a fine grid.
  const Matrix fine = finals_with(1600);
  const double err_coarse = (finals_with(100) - fine).cwiseAbs().maxCoeff();
  const double err_half = (finals_with(200) - fine).cwiseAbs().maxCoeff();
  CHECK(err_half < err_coarse / 2.5);
}

TEST_CASE("bfgs reaches quadratic minima and honors the budget") {
  auto quad = [](const Eigen::VectorXd& x) {
    return 3.0 + 2.0 * (x(0) - 1.5) * (x(0) - 1.5);
  };
  BfgsOptions opt;
  opt.max_evals = 200;
  BfgsResult res = bfgs_minimize(quad, Eigen::VectorXd::Zero(1), opt);
  CHECK(std::abs(res.x(0) - 1.5) < 1e-8);
  CHECK(res.evals <= 200);

  auto rosenbrock = [](const Eigen::VectorXd& x) {
    const double a = 1.0 - x(0), b = x(1) - x(0) * x(0);
    return a * a + 100.0 * b * b;
  };
  opt.max_evals = 4000;
  Eigen::VectorXd x0(2);
  x0 << -1.2, 1.0;
  res = bfgs_minimize(rosenbrock, x0, opt);
  CHECK(res.value < 1e-10);
}

TEST_CASE("optimize: early exit, determinism, restart monotonicity") {
  // Closed maximally mixed probe: the entropy objective is identically zero.
  Scenario closed = tls_scenario(false, 1.0, 100);
  Objective obj;
  obj.kind = ObjectiveKind::MaxEntropy;
  obj.probes = {0.5 * identity(2)};
  OptimizeConfig cfg;
  cfg.n_modes = 3;
  cfg.restarts = 3;
  cfg.max_evals = 50;
  cfg.seed = 42;
  const OptimizationReport rep = optimize(obj, closed, cfg);
  CHECK(rep.best_value <= 1e-12);
  CHECK(rep.total_evals == 3);  // one evaluation per restart
  CHECK(rep.converged);

  // Deterministic across runs and across thread counts.
  Scenario open = tls_scenario(true, 1.0, 60);
  Objective heat;
  heat.kind = ObjectiveKind::MaxEntropy;
  heat.probes = {gibbs_state(Operator(open.h0), 1.0 / open.model.delta)};
  OptimizeConfig small;
  small.n_modes = 2;
  small.restarts = 4;
  small.max_evals = 30;
  small.seed = 7;
  small.jobs = 1;
  const OptimizationReport a = optimize(heat, open, small);
  small.jobs = 2;
  const OptimizationReport b = optimize(heat, open, small);
  CHECK(a.best_value == b.best_value);
  CHECK(a.best_restart == b.best_restart);
  CHECK((a.best_field.coeffs - b.best_field.coeffs).cwiseAbs().maxCoeff() == 0.0);
  for (size_t i = 0; i < a.restart_values.size(); ++i)
    CHECK(a.restart_values[i] == b.restart_values[i]);

  // Best value equals the minimum over restarts.
  double best = a.restart_values[0];
  for (double v : a.restart_values) best = std::min(best, v);
  CHECK(a.best_value == best);
}

TEST_CASE("transfer matrices of ideal maps") {
  // Identity.
  const auto probes = probe_set(ProbeKind::Qubit);
  CHECK((transfer_matrix_from_probe_images(probes) - Eigen::Matrix4d::Identity())
            .cwiseAbs()
            .maxCoeff() < 1e-13);

  // Ideal reset: every probe lands on (I - sx)/2.
  std::vector<Matrix> reset_finals(4, reset_target_state());
  Eigen::Matrix4d reset_want = Eigen::Matrix4d::Zero();
  reset_want(0, 0) = 1.0;
  reset_want(1, 0) = -1.0;
  CHECK((transfer_matrix_from_probe_images(reset_finals) - reset_want)
            .cwiseAbs()
            .maxCoeff() < 1e-13);

  // The gate target: rows (1,0,0,0), (0,0,0,-1), (0,0,-1,0), (0,-1,0,0).
  const Matrix u = hadamard_gate();
  CHECK(Operator(u).unitary());
  std::vector<Matrix> had_finals;
  for (const Matrix& p : probes) had_finals.push_back(u * p * u.adjoint());
  Eigen::Matrix4d had_want = Eigen::Matrix4d::Zero();
  had_want(0, 0) = 1.0;
  had_want(1, 3) = -1.0;
  had_want(2, 2) = -1.0;
  had_want(3, 1) = -1.0;
  CHECK((transfer_matrix_from_probe_images(had_finals) - had_want)
            .cwiseAbs()
            .maxCoeff() < 1e-13);

  CHECK(Operator(sqrt_swap_gate()).unitary());
  // sqrt(SWAP) squared is SWAP.
  Matrix swap = Matrix::Zero(4, 4);
  swap(0, 0) = swap(3, 3) = 1.0;
  swap(1, 2) = swap(2, 1) = 1.0;
  CHECK((sqrt_swap_gate() * sqrt_swap_gate() - swap).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("map tomography of propagated protocols") {
  // Trivial scenario: no drift, no field, closed -> identity transfer matrix.
  Scenario sc = tls_scenario(false, 1.0, 50);
  sc.h0.setZero();
  const ControlField zero = single_mode(sc.grid.t1, sc.grid.t1 / 8.0, 0.1, 0.0);
  const Eigen::Matrix4d t = map_tomography(zero, sc);
  CHECK((t - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff() < 1e-10);

  // Consistency: the transfer matrix acts on Bloch vectors exactly like the
  // propagation it was reconstructed from.
  Scenario open = tls_scenario(true, 1.0, 200);
  const ControlField field = single_mode(open.grid.t1, open.grid.t1 / 8.0,
                                         6.0 * open.model.delta, open.model.delta);
  const Eigen::Matrix4d tm = map_tomography(field, open);
  CHECK(std::abs(tm(0, 0) - 1.0) < 1e-9);
  for (int j = 1; j < 4; ++j) CHECK(std::abs(tm(0, j)) < 1e-9);

  auto gen = testsup::rng(163);
  Objective probe_obj;
  probe_obj.kind = ObjectiveKind::MaxEntropy;
  probe_obj.probes = {testsup::random_density(2, gen)};
  const ProtocolResult run = run_protocol(field, open, probe_obj);
  const Eigen::Vector3d b_in = bloch_vector(probe_obj.probes[0]);
  const Eigen::Vector3d b_out = bloch_vector(run.finals[0]);
  Eigen::Vector4d affine_in(1.0, b_in.x(), b_in.y(), b_in.z());
  const Eigen::Vector4d affine_out = tm * affine_in;
  CHECK(std::abs(affine_out(1) - b_out.x()) < 1e-8);
  CHECK(std::abs(affine_out(2) - b_out.y()) < 1e-8);
  CHECK(std::abs(affine_out(3) - b_out.z()) < 1e-8);
}
