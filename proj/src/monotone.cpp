#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fracvisc/hj_solver.hpp"
#include "hopf_lax_kernel.hpp"

namespace fracvisc {

namespace {

// Lax-Friedrichs Hamiltonian: H(mean slope) - sum_j alpha_j/2 (p_j^+ - p_j^-).
class LaxFriedrichs {
 public:
  LaxFriedrichs(const ProblemSpec& p, const TorusGrid& grid) : p_(p), grid_(grid) {}

  double speed(std::span<const double> u) const {
    return std::max(1e-12, detail::one_sided_speed(grid_, u, p_.hamiltonian));
  }

  void step(std::vector<double>& u, double dt, double alpha, double t) const {
    const std::vector<double> old = u;
    const int n = grid_.n_points();
    const double h = grid_.spacing();
    Vec p(grid_.dim());
    if (grid_.dim() == 1) {
      for (int i = 0; i < n; ++i) {
        const double fw = (old[detail::wrap(i + 1, n)] - old[i]) / h;
        const double bw = (old[i] - old[detail::wrap(i - 1, n)]) / h;
        p[0] = 0.5 * (fw + bw);
        u[i] = old[i] - dt * (p_.hamiltonian.value(p) - 0.5 * alpha * (fw - bw));
      }
    } else {
      auto at = [&](int i, int j) {
        return old[static_cast<std::size_t>(detail::wrap(i, n)) * n + detail::wrap(j, n)];
      };
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const double c = at(i, j);
          const double fx = (at(i + 1, j) - c) / h, bx = (c - at(i - 1, j)) / h;
          const double fy = (at(i, j + 1) - c) / h, by = (c - at(i, j - 1)) / h;
          p[0] = 0.5 * (fx + bx);
          p[1] = 0.5 * (fy + by);
          u[static_cast<std::size_t>(i) * n + j] =
              c - dt * (p_.hamiltonian.value(p) - 0.5 * alpha * (fx - bx + fy - by));
        }
      }
    }
    if (!p_.forcing.is_zero()) {
      const auto f = p_.forcing.sample(grid_, t + 0.5 * dt);
      for (std::size_t i = 0; i < u.size(); ++i) u[i] += dt * f[i];
    }
  }

 private:
  const ProblemSpec& p_;
  const TorusGrid& grid_;
};

}  // namespace

Trajectory monotone_reference(const ProblemSpec& problem, int fine_factor,
                              std::span<const double> snapshot_times) {
  if (fine_factor < 1) throw std::invalid_argument("fine_factor must be >= 1");
  const TorusGrid fine_grid(problem.grid.dim(), problem.grid.n_points() * fine_factor);
  const ProblemSpec fine = problem.on_grid(fine_grid);
  const LaxFriedrichs scheme(fine, fine_grid);
  constexpr double kCfl = 0.4;

  std::vector<double> times{0.0};
  for (double t : snapshot_times) {
    if (!(t > times.back())) throw std::invalid_argument("snapshot times must increase");
    times.push_back(t);
  }

  Trajectory traj{.grid = problem.grid, .s = problem.s, .epsilon = 0.0,
                  .scheme = Scheme::automatic,
                  .hessian_method = HessianMethod::finite_difference};
  std::vector<double> u(fine.u0.values().begin(), fine.u0.values().end());
  double t = 0.0;
  for (double target : times) {
    while (t < target) {
      const double alpha = scheme.speed(u);
      double dt = kCfl * fine_grid.spacing() / (fine_grid.dim() * alpha);
      if (t + dt >= target - 1e-12) dt = target - t;
      scheme.step(u, dt, alpha, t);
      t = t + dt >= target - 1e-12 ? target : t + dt;
      for (double v : u) {
        if (!std::isfinite(v)) throw SolverError("monotone reference produced NaN");
      }
    }
    const Field coarse = subsample(Field(fine_grid, u), problem.grid);
    traj.times.push_back(target);
    traj.semiconcavity.push_back(hessian_max_eig(coarse, HessianMethod::finite_difference));
    double gsup = 0.0;
    for (const auto& g : finite_difference_gradient(coarse)) gsup = std::max(gsup, lp_norm(g, kInfinity));
    traj.gradient_sup.push_back(gsup);
    traj.snapshots.push_back(coarse);
  }
  return traj;
}

}  // namespace fracvisc
