#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fracvisc/hj_solver.hpp"
#include "hopf_lax_kernel.hpp"

namespace fracvisc {

namespace {

double wrap_coordinate(double y) {
  const double r = std::fmod(y, kTwoPi);
  return r < 0.0 ? r + kTwoPi : r;
}

}  // namespace

Field hopf_lax_oracle(const ProblemSpec& problem, double t, const TorusGrid& out,
                      const HopfLaxOptions& options) {
  if (!problem.forcing.is_zero()) throw std::invalid_argument("the Hopf-Lax oracle needs f = 0");
  if (!(t >= 0.0)) throw std::invalid_argument("oracle time must be >= 0");
  if (out.dim() != problem.grid.dim()) throw std::invalid_argument("oracle grid dimension mismatch");
  const ProblemSpec fine = problem.on_grid(out);
  if (t == 0.0) return fine.u0;
  const Lagrangian lagrangian(problem.hamiltonian, std::min(1e-10, options.argument_tolerance));

  const auto nodes = fine.u0.values();
  const double h = out.spacing();
  const double speed = std::max(
      detail::one_sided_speed(out, nodes, problem.hamiltonian),
      detail::one_sided_speed(problem.grid, problem.u0.values(), problem.hamiltonian));
  const double reach = 1.25 * t * speed + 2.0 * h + options.window_periods * kTwoPi;
  const double curvature =
      1.0 / (problem.hamiltonian.theta() * t) + detail::max_second_difference(out, nodes);
  const detail::HopfLaxScan scan{out, lagrangian, t, static_cast<int>(std::ceil(reach / h)),
                                 0.25 * h * h * curvature};

  Field result(out);
  const SpectralField coeffs = problem.u0_function ? SpectralField(out) : forward(problem.u0);
  if (out.dim() == 1) {
    auto v = [&](double y) {
      double x[1] = {wrap_coordinate(y)};
      return problem.u0_function ? problem.u0_function(x) : trig_interpolate(coeffs, x);
    };
    detail::hopf_lax_min_1d(scan, nodes, v, result.values());
  } else {
    auto v = [&](double y0, double y1) {
      double x[2] = {wrap_coordinate(y0), wrap_coordinate(y1)};
      return problem.u0_function ? problem.u0_function(x) : trig_interpolate(coeffs, x);
    };
    detail::hopf_lax_min_2d(scan, nodes, v, result.values());
  }
  return result;
}

SemiconcavityProfile semiconcavity_profile(const Trajectory& trajectory,
                                           const ProblemSpec& problem) {
  SemiconcavityProfile out;
  out.k = trajectory.semiconcavity;
  const double theta = problem.hamiltonian.theta();
  const double k0 = problem.u0_semiconcavity;
  if (problem.forcing.is_zero()) {
    for (double t : trajectory.times) {
      out.riccati_bound.push_back(k0 / (1.0 + theta * k0 * t));
    }
    return out;
  }
  // k' = -theta k^2 + c_f(t) by RK4 between snapshot times.
  auto rhs = [&](double t, double k) { return -theta * k * k + problem.forcing.semiconcavity(t); };
  double k = k0, t = 0.0;
  for (double target : trajectory.times) {
    const int steps = std::max(1, static_cast<int>(std::ceil((target - t) / 1e-3)));
    const double dt = (target - t) / steps;
    for (int j = 0; j < steps; ++j) {
      const double a = rhs(t, k);
      const double b = rhs(t + 0.5 * dt, k + 0.5 * dt * a);
      const double c = rhs(t + 0.5 * dt, k + 0.5 * dt * b);
      const double d = rhs(t + dt, k + dt * c);
      k += dt / 6.0 * (a + 2.0 * b + 2.0 * c + d);
      t += dt;
    }
    t = target;
    out.riccati_bound.push_back(k);
  }
  return out;
}

}  // namespace fracvisc
