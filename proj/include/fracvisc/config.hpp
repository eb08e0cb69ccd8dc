#pragma once

// Flat `key = value` experiment configuration.

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracvisc/hj_solver.hpp"
#include "fracvisc/rate_harness.hpp"

namespace fracvisc {

/// Invalid configuration; carries the offending key and line (0 if unknown).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& key, int line, const std::string& message);
  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  std::string key_;
  int line_;
};

struct ExperimentConfig {
  int dim = 1;
  /// 0 means `auto` (resolution rule).
  int n_points = 0;
  std::vector<double> s_list{0.5};
  std::vector<double> epsilon_list{};
  std::string hamiltonian = "quadratic";
  std::string u0 = "cos";
  std::string forcing = "zero";
  double T = 2.0;
  std::vector<double> p_list{1.5, 2.0, 4.0, kInfinity};
  int snapshot_count = 16;
  double dt_cfl = 0.5;
  std::string reference = "hopf_lax";
  std::string output_dir = "fracvisc_out";
  std::uint64_t seed = 1;
  std::string scheme = "auto";
  double splitting_dt = 0.02;
  std::vector<double> q_list{2.0, 4.0};
  /// (epsilon, eta) viscosity pairs for the dual checks.
  std::vector<std::pair<double, double>> pairs{{0.1, 0.05}, {0.05, 0.025}};
  /// Dual viscosities for the eta-independence rerun.
  std::vector<double> eta_list{0.1, 0.05, 0.025};

  ExperimentConfig();

  /// Parses config text; `source` names it in diagnostics.
  static ExperimentConfig parse(const std::string& text, const std::string& source = "config");
  static ExperimentConfig load(const std::filesystem::path& path);

  /// Canonical config text; parsing it gives back the same configuration.
  std::string to_text() const;
  nlohmann::json echo() const;

  Hamiltonian make_hamiltonian() const;
  SolverOptions solver_options() const;
  std::vector<double> snapshot_times() const;
  /// Problem on an explicit grid size (0 = resolution rule for (epsilon, s)).
  ProblemSpec problem(double s, double epsilon, int n = 0) const;
  SweepPlan sweep_plan() const;
};

/// Accepted key names, in canonical order.
const std::vector<std::string>& config_keys();

}  // namespace fracvisc
