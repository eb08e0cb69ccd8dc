#pragma once

// Viscous and inviscid solvers for
//   d_t u + eps (-Delta)^s u + H(Du) = f   on the torus,  u(0) = u0,
// plus the semiconcavity monitor.

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fracvisc/hamiltonian.hpp"
#include "fracvisc/torus.hpp"

namespace fracvisc {

/// Raised when a time integration is aborted (blow-up, under-resolution, CFL).
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Source term f(x, t) with a one-sided curvature bound c_f(t) >= max eig D^2 f.
struct Forcing {
  std::function<double(std::span<const double>, double)> value;
  std::function<double(double)> semiconcavity;
  std::string name = "zero";

  bool is_zero() const noexcept { return !value; }
  Field sample(const TorusGrid& grid, double t) const;

  static Forcing zero();
  /// f(x, t) = amplitude * sum_j cos(x_j).
  static Forcing cosine(double amplitude);
  static Forcing constant(double value);
};

struct ProblemSpec {
  TorusGrid grid;
  double s = 0.5;
  double epsilon = 0.0;
  Hamiltonian hamiltonian = Hamiltonian::quadratic();
  Field u0;
  /// Closed form of u0; when empty u0 is evaluated between nodes by
  /// trigonometric interpolation.
  PointFunction u0_function;
  Forcing forcing = Forcing::zero();
  double T = 1.0;
  double u0_semiconcavity = 0.0;

  /// Checks the invariants; `for_reference` allows epsilon = 0.
  void validate(bool for_reference = false) const;
  /// Copy on another grid (u0 resampled from u0_function, or by
  /// trigonometric interpolation when no closed form exists).
  ProblemSpec on_grid(const TorusGrid& grid) const;
  ProblemSpec with_epsilon(double eps) const;
  ProblemSpec with_order(double order) const;
};

/// Builds a problem from a closed-form initial datum; u0_semiconcavity is the
/// finite-difference Hessian bound of the samples, raised to the spectral one.
ProblemSpec make_problem(const TorusGrid& grid, double s, double epsilon, Hamiltonian H,
                         PointFunction u0, Forcing forcing, double T);

/// Named initial data: "cos" (1D cos x), "cos2d" (cos x + cos y), "bump"
/// (exp(cos x - 1), summed over axes in 2D), "lipschitz" (|sin(x/2)|),
/// or "coeffs:a1,b1,a2,b2,..." for sum_k a_k cos(kx) + b_k sin(kx).
PointFunction initial_datum(std::string_view name, int dim);
/// "zero", "cos:amplitude" or "const:value".
Forcing forcing_preset(std::string_view name);

enum class Scheme {
  /// See resolve_scheme.
  automatic,
  /// Pseudospectral, exact Fourier integrating factor with classical RK4
  /// on the dealiased nonlinear term.
  integrating_factor_rk4,
  /// Strang splitting of exact fractional heat factors around an exact
  /// Hopf-Lax step on the interpolated iterate.
  hopf_lax_splitting,
};

std::string to_string(Scheme scheme);
Scheme parse_scheme(std::string_view text);

struct SolverOptions {
  Scheme scheme = Scheme::automatic;
  /// IF-RK4 step: dt = dt_cfl * h / max(1, sup |D_pH(Du)|).
  double dt_cfl = 0.5;
  /// Target splitting step; snapshot times are always hit exactly.
  double splitting_dt = 0.02;
  double blowup_limit = 1e6;
  /// Abort threshold on the energy fraction of H(Du) above n/3.
  double tail_limit = 1e-6;
};

struct Trajectory {
  TorusGrid grid;
  std::vector<double> times{};
  std::vector<Field> snapshots{};
  /// k(t) = hessian_max_eig of each snapshot.
  std::vector<double> semiconcavity{};
  std::vector<double> gradient_sup{};
  double s = 0.0;
  double epsilon = 0.0;
  Scheme scheme = Scheme::integrating_factor_rk4;
  HessianMethod hessian_method = HessianMethod::spectral;

  const Field& at(double t) const;
  std::size_t size() const noexcept { return times.size(); }
};

/// n uniform times T/n, 2T/n, ..., T.
std::vector<double> uniform_times(double T, int count);

/// Smallest power of two such that eps^(1/(2s)) spans at least `cells` cells.
int resolution_rule(double epsilon, double s, int cells = 6, int min_points = 64,
                    int max_points = 1 << 15);

/// Automatic choice: the splitting scheme for uniformly convex Hamiltonians
/// (any s), IF-RK4 otherwise. An explicit request is returned unchanged.
Scheme resolve_scheme(Scheme requested, double s, const Hamiltonian& H);

/// Integrates the viscous problem; the trajectory holds t = 0 and every
/// requested time (T is appended when absent).
Trajectory viscous_solve(const ProblemSpec& problem, const SolverOptions& options,
                         std::span<const double> snapshot_times);

struct HopfLaxOptions {
  double argument_tolerance = 1e-10;
  /// Extra window beyond t * sup |D_pH(Du0)|, in periods.
  double window_periods = 0.0;
};

/// u(x, t) = min_y [u0(y) + t L((x - y) / t)] at every node of `out`
/// (f = 0, uniformly convex H).
Field hopf_lax_oracle(const ProblemSpec& problem, double t, const TorusGrid& out,
                      const HopfLaxOptions& options = {});

/// First-order Lax-Friedrichs reference for d_t u + H(Du) = f on a grid
/// refined by fine_factor; snapshots are restricted to problem.grid.
Trajectory monotone_reference(const ProblemSpec& problem, int fine_factor,
                              std::span<const double> snapshot_times);

struct SemiconcavityProfile {
  std::vector<double> k;
  /// Solution of k' = -theta k^2 + c_f(t), k(0) = u0_semiconcavity.
  std::vector<double> riccati_bound;
};

SemiconcavityProfile semiconcavity_profile(const Trajectory& trajectory,
                                           const ProblemSpec& problem);

/// Writes one CSV per snapshot, named `<prefix>_s<s>_eps<eps>_t<t>.csv`.
std::vector<std::filesystem::path> export_trajectory(const Trajectory& trajectory,
                                                     const std::filesystem::path& dir,
                                                     const std::string& prefix = "u");
void write_field_csv(const Field& f, const std::filesystem::path& path);
Field read_field_csv(const TorusGrid& grid, const std::filesystem::path& path);
std::string snapshot_filename(const std::string& prefix, double s, double eps, double t);

}  // namespace fracvisc
