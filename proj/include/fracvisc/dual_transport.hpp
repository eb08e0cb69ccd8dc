#pragma once

// Backward nonlocal Fokker-Planck equation
//   -d_t rho + eta (-Delta)^s rho + div(b rho) = 0,  rho(tau) = alpha,
// the drift built from two viscous solutions, and the L^q Gronwall and
// duality checks.

#include <functional>
#include <string>
#include <vector>

#include "fracvisc/hamiltonian.hpp"
#include "fracvisc/hj_solver.hpp"
#include "fracvisc/torus.hpp"

namespace fracvisc {

/// Where drift components live. `nodal` stores b at the grid nodes (spectral
/// divergence); `face` stores b_j at x + h e_j / 2 (conservative differences).
enum class DriftLayout { nodal, face };

struct DriftField {
  TorusGrid grid;
  DriftLayout layout = DriftLayout::nodal;
  /// Fractional order of the diffusion the drift is paired with.
  double s = 0.5;
  std::vector<double> times{};
  /// components[j][axis] at times[j].
  std::vector<std::vector<Field>> components{};
  /// || [div b(t_j)]^- ||_inf and min div b(t_j).
  std::vector<double> div_minus{};
  std::vector<double> div_min{};
  int zeta_nodes = 0;
  std::string source{};

  Field divergence(std::size_t j) const;
  /// Recomputes div_minus and div_min from the components.
  void refresh_profiles();
  double sup_abs() const;
  /// Integral of the piecewise-linear div_minus profile over [a, b].
  double div_minus_integral(double a, double b) const;
  /// Components at time t by linear interpolation between snapshots.
  std::vector<Field> at(double t) const;

  /// Samples b(x, t)[axis] at the layout's points for each time.
  static DriftField from_function(
      const TorusGrid& grid, DriftLayout layout, std::vector<double> times,
      const std::function<double(std::span<const double>, double, int)>& b, double s = 0.5);
};

/// b = -int_0^1 D_pH(zeta Du_eps + (1 - zeta) Du_eta) dzeta by Gauss-Legendre
/// in zeta. Nodal drifts use spectral gradients (dealiased); face drifts use
/// one-sided differences normal to the face and averaged centred
/// differences along it.
DriftField build_drift(const Trajectory& traj_eps, const Trajectory& traj_eta,
                       const Hamiltonian& H, int zeta_nodes,
                       DriftLayout layout = DriftLayout::face);

/// Face flux of the finite-volume dual. `upwind` is first order and keeps the
/// discrete Gronwall bound exact; `limited` is a minmod-limited second-order
/// reconstruction (positivity preserving, bound not exact per step).
enum class FluxScheme { upwind, limited };

struct DualOptions {
  /// Spectral: dt = dt_cfl h / max(1, sup|b|). Finite volume: dt = dt_cfl h / sum_j sup|b_j|.
  double dt_cfl = 0.4;
  double blowup_limit = 1e6;
  double tail_limit = 1e-6;
  FluxScheme flux = FluxScheme::upwind;
};

struct DualSolution {
  TorusGrid grid;
  double eta = 0.0;
  double tau = 0.0;
  Field alpha;
  /// Increasing physical times ending at tau, with rho(tau) = alpha.
  std::vector<double> times{};
  std::vector<Field> snapshots{};
  std::vector<double> mean{};
  std::vector<double> min{};

  const Field& at(double t) const;
};

/// Integrates the time-reversed problem
///   d_t r + eta (-Delta)^s r + div(b(tau - t) r) = 0,  r(0) = alpha,
/// and stores rho(t) = r(tau - t) at every drift time <= tau.
/// Nodal drifts: IF-RK4 with the Fourier symbol. Face drifts: upwind finite
/// volumes followed by the exact heat factor of the grid-Laplacian symbol,
/// which keeps rho >= 0 and satisfies the discrete Gronwall bound per step.
DualSolution dual_solve(const DriftField& drift, double eta, const Field& alpha, double tau,
                        const DualOptions& options = {});

struct GronwallEntry {
  double time;
  double norm_q;   ///< ||rho(t)||_q^q (of |rho|)
  double bound;    ///< exp((q-1) int_t^tau ||[div b]^-||_inf) ||alpha||_q^q
  double margin;   ///< 1 - norm_q / bound
};

struct GronwallReport {
  double q = 2.0;
  /// exp((q-1) int_0^tau ||[div b]^-||_inf)^(1/q).
  double constant = 1.0;
  std::vector<GronwallEntry> entries{};
  double worst_margin = 1.0;
  bool pass = true;
};

/// Fails when some norm exceeds its bound by more than `slack` (relative).
GronwallReport gronwall_check(const DualSolution& sol, const DriftField& drift, double q,
                              double slack = 0.01);

/// Gronwall constant from the Riccati semiconcavity bound,
/// exp((q-1) n Theta int_0^tau k(t) dt)^(1/q); independent of both viscosities.
double riccati_gronwall_constant(const ProblemSpec& problem, double tau, double q);

struct DivergenceCheck {
  /// min over snapshots of div_min(t) + n Theta k(t); the bound holds when >= -tol.
  double worst = 0.0;
  bool pass = true;
};

DivergenceCheck divergence_lower_bound(const DriftField& drift, std::span<const double> k,
                                       double Theta, double tol = 1e-6);

struct DualityResidual {
  double lhs = 0.0;   ///< int w(tau) rho(tau)
  double rhs = 0.0;   ///< (eps - eta) int int [-(-Delta)^s u_eps] rho
  double residual = 0.0;
};

/// Residual of the duality identity for w = u_eps - u_eta with w(0) = 0,
/// time integral by the trapezoid rule over the dual snapshots.
DualityResidual duality_residual(const Trajectory& traj_eps, const Trajectory& traj_eta,
                                 const DualSolution& dual, double tau);

/// (w^+)^(p-1) or (w^-)^(p-1), normalized to unit L^{p'} norm; p' = p/(p-1).
Field dual_datum(const Field& w, double p, bool positive_part);

std::vector<std::filesystem::path> export_dual(const DualSolution& sol, double s,
                                               const std::filesystem::path& dir);

}  // namespace fracvisc
