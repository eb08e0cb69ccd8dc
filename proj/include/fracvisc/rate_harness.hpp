#pragma once

// epsilon sweeps, error tables, rate fits and report emission.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fracvisc/hj_solver.hpp"

namespace fracvisc {

enum class ReferenceKind { hopf_lax, monotone };

struct ReferenceSpec {
  ReferenceKind kind = ReferenceKind::hopf_lax;
  int fine_factor = 8;

  /// "hopf_lax" or "monotone:<factor>".
  static ReferenceSpec parse(std::string_view text);
  std::string describe() const;
};

struct SweepPlan {
  /// Problem template; its epsilon and s are replaced per cell and its grid
  /// is replaced when n_points is automatic.
  ProblemSpec base;
  std::vector<double> epsilons{};
  std::vector<double> orders{};
  /// Norm exponents; kInfinity selects the sup norm.
  std::vector<double> norms{};
  ReferenceSpec reference{};
  std::vector<double> times{};
  SolverOptions solver{};
  /// 0 selects the resolution rule per (epsilon, s).
  int n_points = 0;
  int min_points = 64;
  int max_points = 1 << 15;

  void validate() const;
  int grid_points(double epsilon, double s) const;
};

struct SweepCell {
  double s = 0.0;
  double epsilon = 0.0;
  int n_points = 0;
  bool ok = false;
  std::string message{};
  /// Per norm: max over snapshot times of ||u_eps(t) - u_ref(t)||_p.
  std::vector<double> errors{};
  /// Per norm: max over snapshot times of ||u_ref(t)||_p.
  std::vector<double> reference_norms{};
  /// sup_t sup_x (u_eps - u_ref)^+.
  double one_sided_error = 0.0;
  /// max over nodes and snapshots of -(-Delta)^{1/2} u_eps.
  double half_laplacian_bound = 0.0;
  std::vector<double> times{};
  std::vector<double> semiconcavity{};
  std::vector<double> gradient_sup{};
};

struct SweepResult {
  SweepPlan plan;
  std::vector<SweepCell> cells{};

  /// Successful (epsilon, error) pairs for one s and one norm, epsilon decreasing.
  std::vector<std::pair<double, double>> table(double s, double p) const;
};

/// Worker count from FRACVISC_THREADS, else hardware concurrency.
int worker_count();

/// Runs every (s, epsilon) cell; cells are independent and may run in
/// parallel, results are ordered by (s, epsilon) as in the plan. Solver
/// failures mark the cell and the sweep continues.
SweepResult run_sweep(const SweepPlan& plan, int threads = 0);

enum class RateModel { power, power_log };

std::string to_string(RateModel model);
RateModel parse_rate_model(std::string_view text);

struct RateFit {
  RateModel model = RateModel::power;
  /// power: slope of log err against log eps. power_log: fixed at 1.
  double exponent = 0.0;
  double prefactor = 0.0;
  /// RMS of the log-space residuals.
  double residual = 0.0;
  /// power_log only: free slope of log err against log(eps |log eps|).
  double free_slope = 0.0;
  std::vector<std::pair<double, double>> points{};

  /// Model prediction at epsilon.
  double predict(double epsilon) const;
};

/// Least-squares fit; needs >= 5 points, positive errors, non-constant data.
RateFit fit_rate(const std::vector<std::pair<double, double>>& points, RateModel model);

struct ModelComparison {
  bool distinguishable = false;
  RateModel preferred = RateModel::power;
};

/// Models are distinguishable only when residuals differ by >= 20%.
ModelComparison compare_models(const RateFit& power, const RateFit& power_log);

struct RateTarget {
  double exponent = 0.0;
  RateModel model = RateModel::power;
};

/// Declared target exponent for (s, p), if any.
std::optional<RateTarget> rate_target(double s, double p);

/// Slope used for acceptance: exponent for power fits, free_slope for power_log.
double acceptance_slope(const RateFit& fit);

struct FitVerdict {
  double s = 0.0;
  double p = 0.0;
  RateFit fit{};
  std::optional<RateTarget> target{};
  bool pass = true;
};

/// Fits every (s, p) with at least five successful cells; the model is the
/// declared target's (power when none).
std::vector<FitVerdict> fit_all(const SweepResult& result);

struct OneSidedReport {
  std::vector<double> epsilons{};
  std::vector<double> bounds{};
  std::vector<double> errors{};
  /// (max - min) / max of the measured bounds.
  double spread = 0.0;
  bool hypothesis_uniform = false;
  std::optional<RateFit> fit{};
  bool pass = true;
};

/// Measures the 1/2-semi-superharmonicity constant and the one-sided error
/// of a single trajectory against reference snapshots.
std::pair<double, double> one_sided_measure(const Trajectory& trajectory,
                                            const std::vector<Field>& reference);

/// Aggregates the s = 1/2 cells of a sweep; passes vacuously when the
/// measured bound is not uniform within 20%.
OneSidedReport one_sided_check(const SweepResult& result, double s = 0.5);

// ------------------------------------------------------------ report

std::string format_p(double p);
double parse_p(std::string_view text);

struct RateRow {
  double s = 0.0;
  double p = 0.0;
  double epsilon = 0.0;
  double error = 0.0;
  double norm = 0.0;
  std::string ref_kind{};
};

std::vector<RateRow> rate_rows(const SweepResult& result);
void write_rates_csv(const std::vector<RateRow>& rows, const std::filesystem::path& path);
std::vector<RateRow> read_rates_csv(const std::filesystem::path& path);

nlohmann::json fit_to_json(const FitVerdict& verdict);
FitVerdict fit_from_json(const nlohmann::json& j);

/// Writes rates.csv, report.json and plots.gp into `dir`; throws on an empty
/// verdict list or an unwritable directory.
void emit_report(const std::vector<RateRow>& rows, const std::vector<FitVerdict>& verdicts,
                 const nlohmann::json& config_echo, const std::filesystem::path& dir,
                 const nlohmann::json& extra = nlohmann::json::object());

/// Refits a table read back from rates.csv.
std::vector<FitVerdict> fit_rows(const std::vector<RateRow>& rows);

}  // namespace fracvisc
