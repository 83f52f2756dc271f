#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "oqctrl/errors.hpp"
#include "oqctrl/scenario.hpp"

namespace oqctrl {

namespace {

void put_number(std::ofstream& out, double v, bool leading_comma) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  if (leading_comma) out << ',';
  out << buf;
}

}  // namespace

std::string ensure_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
  return dir;
}

void write_trajectory_csv(const std::string& path,
                          const std::vector<TrajectoryPoint>& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "t,field,entropy,sigma_rate,sigma_acc,infidelity,bx,by,bz,gen_purity\n";
  for (const TrajectoryPoint& p : traj) {
    put_number(out, p.t, false);
    put_number(out, p.field, true);
    put_number(out, p.thermo.entropy, true);
    put_number(out, p.thermo.sigma_rate, true);
    put_number(out, p.thermo.sigma_accumulated, true);
    put_number(out, p.objective, true);
    if (p.thermo.bloch) {
      put_number(out, p.thermo.bloch->x(), true);
      put_number(out, p.thermo.bloch->y(), true);
      put_number(out, p.thermo.bloch->z(), true);
    } else {
      out << ",,,";
    }
    if (p.thermo.gen_purity) {
      put_number(out, *p.thermo.gen_purity, true);
    } else {
      out << ',';
    }
    out << '\n';
  }
}

void write_field_json(const std::string& path, const ScenarioConfig& cfg,
                      const ControlField& field, int n_steps) {
  nlohmann::ordered_json j;
  j["spec_version"] = 1;
  j["task"] = task_name(cfg.task);
  j["tau_au"] = field.tau;
  j["sigma_au"] = field.sigma;
  j["n_steps"] = n_steps;
  j["freqs_au"] = std::vector<double>(field.freqs.data(),
                                      field.freqs.data() + field.freqs.size());
  j["coeffs"] = std::vector<double>(field.coeffs.data(),
                                    field.coeffs.data() + field.coeffs.size());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
}

ControlField read_field_json(const std::string& path, int* n_steps_out) {
  std::ifstream in(path);
  if (!in) throw InvalidConfig("cannot open field file '" + path + "'", 0, "field");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw InvalidConfig(std::string("field json parse error: ") + e.what(), 0, "field");
  }
  ControlField f;
  try {
    f.tau = j.at("tau_au").get<double>();
    f.sigma = j.at("sigma_au").get<double>();
    const auto freqs = j.at("freqs_au").get<std::vector<double>>();
    const auto coeffs = j.at("coeffs").get<std::vector<double>>();
    if (freqs.size() != coeffs.size())
      throw InvalidConfig("freqs/coeffs size mismatch", 0, "field");
    f.freqs = Eigen::Map<const Eigen::VectorXd>(freqs.data(), freqs.size());
    f.coeffs = Eigen::Map<const Eigen::VectorXd>(coeffs.data(), coeffs.size());
    if (n_steps_out) *n_steps_out = j.value("n_steps", 0);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("field json: ") + e.what(), 0, "field");
  }
  return f;
}

void write_summary_json(const std::string& path, const std::string& json_text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << json_text << "\n";
}

}  // namespace oqctrl
