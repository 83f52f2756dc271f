#include <chrono>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "oqctrl/errors.hpp"
#include "oqctrl/scenario.hpp"

namespace {

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoi(item));
  return out;
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stod(item));
  return out;
}

struct CommonFlags {
  std::string config_path;
  std::string out_dir;
  std::string scheme;
  std::string rate_mode;
  long long seed = -1;
  int restarts = -1;
  int jobs = -1;

  void attach(CLI::App* cmd, bool config_required = true) {
    auto* opt = cmd->add_option("--config", config_path, "scenario config file");
    if (config_required) opt->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed, "random seed");
    cmd->add_option("--restarts", restarts, "number of optimizer restarts");
    cmd->add_option("--scheme", scheme, "closed|open|closed_field_on_open");
    cmd->add_option("--rate-mode", rate_mode, "main_text|appendix");
    cmd->add_option("--jobs", jobs, "worker threads (default: hardware)");
  }

  oqctrl::ScenarioConfig load() const {
    oqctrl::ScenarioConfig cfg = oqctrl::parse_config_file(config_path);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (restarts > 0) cfg.restarts = restarts;
    if (!scheme.empty()) cfg.scheme = oqctrl::scheme_from_name(scheme);
    if (!rate_mode.empty()) cfg.rate_mode = oqctrl::rate_mode_from_name(rate_mode);
    if (jobs >= 0) cfg.jobs = jobs;
    return cfg;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Thermodynamically consistent optimal control of open quantum systems"};
  app.require_subcommand(1);

  CommonFlags f_optimize, f_simulate, f_compare, f_freq, f_sweep, f_tomo;
  std::string field_path_sim, field_path_tomo;
  std::string m_list_str = "1,2,5,10,20";
  std::string dims_str = "2,3,4";
  std::string gammas_str;

  auto* c_opt = app.add_subcommand("optimize", "optimize a control task");
  f_optimize.attach(c_opt);

  auto* c_sim = app.add_subcommand("simulate", "replay a saved field");
  f_simulate.attach(c_sim);
  c_sim->add_option("--field", field_path_sim, "field.json to replay")->required();

  auto* c_cmp = app.add_subcommand("compare-schemes",
                                   "closed / replayed / open-optimal gate comparison");
  f_compare.attach(c_cmp);

  auto* c_freq = app.add_subcommand("freq-study",
                                    "objective versus number of field modes");
  f_freq.attach(c_freq);
  c_freq->add_option("--m-list", m_list_str, "comma list of mode counts");
  c_freq->add_option("--dims", dims_str, "comma list of spin dimensions");

  auto* c_sweep = app.add_subcommand("sweep-coupling",
                                     "gate infidelity versus decay rate");
  f_sweep.attach(c_sweep);
  c_sweep->add_option("--gammas", gammas_str,
                      "comma list of decay rates Gamma (a.u.), ascending");

  auto* c_tomo = app.add_subcommand("tomography", "Pauli transfer matrix of a field");
  f_tomo.attach(c_tomo);
  c_tomo->add_option("--field", field_path_tomo, "field.json to characterize")->required();

  CLI11_PARSE(app, argc, argv);

  const auto t_start = std::chrono::steady_clock::now();
  try {
    oqctrl::CommandResult res;
    if (c_opt->parsed()) {
      res = oqctrl::cmd_optimize(f_optimize.load());
    } else if (c_sim->parsed()) {
      res = oqctrl::cmd_simulate(f_simulate.load(), field_path_sim);
    } else if (c_cmp->parsed()) {
      res = oqctrl::cmd_compare_schemes(f_compare.load());
    } else if (c_freq->parsed()) {
      res = oqctrl::cmd_freq_study(f_freq.load(), parse_int_list(m_list_str),
                                   parse_int_list(dims_str));
    } else if (c_sweep->parsed()) {
      oqctrl::ScenarioConfig cfg = f_sweep.load();
      std::vector<double> gammas;
      if (!gammas_str.empty()) {
        gammas = parse_double_list(gammas_str);
      } else {
        // Default: five log-spaced points from 1e-4 to 1e-2 times delta.
        for (int i = 0; i < 5; ++i)
          gammas.push_back(cfg.delta_au * 1e-4 * std::pow(10.0, 0.5 * i));
      }
      res = oqctrl::cmd_sweep_coupling(cfg, gammas);
    } else if (c_tomo->parsed()) {
      res = oqctrl::cmd_tomography(f_tomo.load(), field_path_tomo);
    }
    const double secs = std::chrono::duration<double>(
                            std::chrono::steady_clock::now() - t_start)
                            .count();
    std::cerr << "wall_time_s " << secs << "\n";
    if (oqctrl::ControlField::clamped_evaluations() > 0)
      std::cerr << "warning: field evaluated outside [0, tau] "
                << oqctrl::ControlField::clamped_evaluations() << " times\n";
    return res.exit_code;
  } catch (const oqctrl::InvalidConfig& e) {
    std::cerr << "config error";
    if (e.line > 0) std::cerr << " (line " << e.line << ", field '" << e.field << "')";
    std::cerr << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
