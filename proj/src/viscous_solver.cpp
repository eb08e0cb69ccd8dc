#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fft.hpp"
#include "hopf_lax_kernel.hpp"
#include "fracvisc/hj_solver.hpp"

namespace fracvisc {

namespace {

std::string describe_cell(const ProblemSpec& p) {
  std::ostringstream out;
  out << "(s=" << p.s << ", eps=" << p.epsilon << ", n=" << p.grid.n_points() << ")";
  return out.str();
}

std::vector<double> complete_times(std::span<const double> requested, double T) {
  std::vector<double> times{0.0};
  for (double t : requested) {
    if (!(t > times.back()) || t > T * (1.0 + 1e-12)) {
      throw std::invalid_argument("snapshot times must increase within (0, T]");
    }
    times.push_back(std::min(t, T));
  }
  if (times.back() < T) times.push_back(T);
  return times;
}

void check_finite_and_bounded(std::span<const double> u, double limit, const ProblemSpec& p,
                              double t) {
  for (double v : u) {
    if (!std::isfinite(v) || std::abs(v) > limit) {
      std::ostringstream msg;
      msg << "blow-up at t=" << t << " " << describe_cell(p) << ": sup|u| exceeded " << limit
          << " or NaN";
      throw SolverError(msg.str());
    }
  }
}

void record(Trajectory& traj, double t, Field u) {
  const auto grads = traj.hessian_method == HessianMethod::spectral
                         ? spectral_gradient(u)
                         : finite_difference_gradient(u);
  double gsup = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    double sq = 0.0;
    for (const auto& g : grads) sq += g[i] * g[i];
    gsup = std::max(gsup, std::sqrt(sq));
  }
  traj.times.push_back(t);
  traj.semiconcavity.push_back(hessian_max_eig(u, traj.hessian_method));
  traj.gradient_sup.push_back(gsup);
  traj.snapshots.push_back(std::move(u));
}

// ------------------------------------------------------------ IF-RK4

class SpectralIntegrator {
 public:
  SpectralIntegrator(const ProblemSpec& problem, const SolverOptions& options)
      : p_(problem),
        opt_(options),
        table_(problem.grid),
        n_(problem.grid.size()),
        symbol_(n_),
        du_(problem.grid.dim(), std::vector<double>(n_)),
        spec_(n_),
        scratch_(n_),
        nodal_(n_),
        forcing_(n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      symbol_[i] = fractional_symbol(p_.grid, i, p_.s, FractionalSymbol::fourier);
    }
  }

  // N(u) = f - H(Du), dealiased; returns sup |D_pH(Du)|.
  double nonlinear(std::span<const Complex> u_hat, double t, std::span<Complex> out) {
    const auto& g = p_.grid;
    const int dim = g.dim();
    for (int axis = 0; axis < dim; ++axis) {
      for (std::size_t i = 0; i < n_; ++i) {
        const bool keep = table_.retained[i] && g.axis_index(i, axis) != g.n_points() / 2;
        spec_[i] = keep ? Complex(0.0, table_.k[axis][i]) * u_hat[i] : Complex{};
      }
      detail::fft_inverse_real(g, spec_, scratch_, du_[axis]);
    }
    if (!p_.forcing.is_zero()) {
      double x[2];
      for (std::size_t i = 0; i < n_; ++i) {
        g.node_coordinates(i, std::span<double>(x, dim));
        forcing_[i] = p_.forcing.value(std::span<const double>(x, dim), t);
      }
    }
    double gsup = 0.0;
    Vec p(dim);
    for (std::size_t i = 0; i < n_; ++i) {
      for (int axis = 0; axis < dim; ++axis) p[axis] = du_[axis][i];
      const auto e = p_.hamiltonian.eval(p);
      gsup = std::max(gsup, e.gradient.norm());
      nodal_[i] = (p_.forcing.is_zero() ? 0.0 : forcing_[i]) - e.value;
    }
    detail::fft_forward_real(g, nodal_, scratch_, out);
    double tail = 0.0, total = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      const double e = std::norm(out[i]);
      total += e;
      if (!table_.retained[i]) {
        tail += e;
        out[i] = Complex{};
      }
    }
    if (total > 0.0 && tail / total > opt_.tail_limit) {
      std::ostringstream msg;
      msg << "under-resolved at t=" << t << " " << describe_cell(p_)
          << ": spectral tail fraction " << tail / total << " > " << opt_.tail_limit
          << "; use a finer grid";
      throw SolverError(msg.str());
    }
    return gsup;
  }

  Trajectory run(std::span<const double> requested) {
    const auto times = complete_times(requested, p_.T);
    Trajectory traj{.grid = p_.grid, .s = p_.s, .epsilon = p_.epsilon,
                    .scheme = Scheme::integrating_factor_rk4,
                    .hessian_method = HessianMethod::spectral};
    std::vector<Complex> u(n_), k1(n_), k2(n_), k3(n_), k4(n_), stage(n_), e_half(n_), e_full(n_);
    detail::fft_forward_real(p_.grid, p_.u0.values(), scratch_, u);
    record(traj, 0.0, p_.u0);
    std::vector<double> nodal_u(n_);
    const double h = p_.grid.spacing();
    double t = 0.0;
    for (std::size_t target = 1; target < times.size(); ++target) {
      const double t_end = times[target];
      while (t < t_end) {
        const double gsup = nonlinear(u, t, k1);
        double dt = opt_.dt_cfl * h / std::max(1.0, gsup);
        bool lands = false;
        if (t + dt >= t_end - 1e-12 * std::max(1.0, t_end)) {
          dt = t_end - t;
          lands = true;
        }
        for (std::size_t i = 0; i < n_; ++i) {
          e_half[i] = std::exp(-0.5 * p_.epsilon * symbol_[i] * dt);
          e_full[i] = e_half[i] * e_half[i];
        }
        for (std::size_t i = 0; i < n_; ++i) stage[i] = e_half[i].real() * (u[i] + 0.5 * dt * k1[i]);
        nonlinear(stage, t + 0.5 * dt, k2);
        for (std::size_t i = 0; i < n_; ++i) stage[i] = e_half[i].real() * u[i] + 0.5 * dt * k2[i];
        nonlinear(stage, t + 0.5 * dt, k3);
        for (std::size_t i = 0; i < n_; ++i) {
          stage[i] = e_full[i].real() * u[i] + dt * e_half[i].real() * k3[i];
        }
        nonlinear(stage, t + dt, k4);
        for (std::size_t i = 0; i < n_; ++i) {
          const double eh = e_half[i].real(), ef = e_full[i].real();
          u[i] = ef * u[i] + dt / 6.0 * (ef * k1[i] + 2.0 * eh * (k2[i] + k3[i]) + k4[i]);
        }
        t = lands ? t_end : t + dt;
        detail::fft_inverse_real(p_.grid, u, scratch_, nodal_u);
        check_finite_and_bounded(nodal_u, opt_.blowup_limit, p_, t);
      }
      record(traj, t_end, Field(p_.grid, nodal_u));
    }
    return traj;
  }

 private:
  const ProblemSpec& p_;
  const SolverOptions& opt_;
  detail::WaveTable table_;
  std::size_t n_;
  std::vector<double> symbol_;
  std::vector<std::vector<double>> du_;
  std::vector<Complex> spec_, scratch_;
  std::vector<double> nodal_, forcing_;
};

// ---------------------------------------------------- Hopf-Lax splitting

class SplittingIntegrator {
 public:
  SplittingIntegrator(const ProblemSpec& problem, const SolverOptions& options)
      : p_(problem),
        opt_(options),
        lagrangian_(problem.hamiltonian),
        n_(problem.grid.size()),
        symbol_(n_),
        spec_(n_),
        scratch_(n_),
        factor_(n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      symbol_[i] = fractional_symbol(p_.grid, i, p_.s, FractionalSymbol::grid_laplacian);
    }
  }

  Trajectory run(std::span<const double> requested) {
    const auto times = complete_times(requested, p_.T);
    Trajectory traj{.grid = p_.grid, .s = p_.s, .epsilon = p_.epsilon,
                    .scheme = Scheme::hopf_lax_splitting,
                    .hessian_method = HessianMethod::finite_difference};
    std::vector<double> u(p_.u0.values().begin(), p_.u0.values().end());
    record(traj, 0.0, p_.u0);
    double t = 0.0;
    for (std::size_t target = 1; target < times.size(); ++target) {
      const double interval = times[target] - t;
      const int steps = std::max(1, static_cast<int>(std::ceil(interval / opt_.splitting_dt - 1e-9)));
      const double dt = interval / steps;
      set_heat_factor(0.5 * dt);
      for (int k = 0; k < steps; ++k) {
        const double t0 = t + k * dt;
        heat(u);
        add_forcing(u, t0, 0.5 * dt);
        hopf_lax_step(u, dt);
        add_forcing(u, t0 + 0.5 * dt, 0.5 * dt);
        heat(u);
        check_finite_and_bounded(u, opt_.blowup_limit, p_, t0 + dt);
      }
      t = times[target];
      record(traj, t, Field(p_.grid, u));
    }
    return traj;
  }

 private:
  void set_heat_factor(double tau) {
    for (std::size_t i = 0; i < n_; ++i) factor_[i] = std::exp(-p_.epsilon * symbol_[i] * tau);
  }

  void heat(std::vector<double>& u) {
    if (p_.epsilon == 0.0) return;
    detail::fft_forward_real(p_.grid, u, scratch_, spec_);
    for (std::size_t i = 0; i < n_; ++i) spec_[i] *= factor_[i];
    detail::fft_inverse_real(p_.grid, spec_, scratch_, u);
  }

  void add_forcing(std::vector<double>& u, double t0, double tau) {
    if (p_.forcing.is_zero()) return;
    const auto f = p_.forcing.sample(p_.grid, t0 + 0.5 * tau);
    for (std::size_t i = 0; i < n_; ++i) u[i] += tau * f[i];
  }

  void hopf_lax_step(std::vector<double>& u, double dt) {
    const auto& g = p_.grid;
    const double h = g.spacing();
    const double reach = 1.25 * dt * detail::one_sided_speed(g, u, p_.hamiltonian) + 2.0 * h;
    const int m = static_cast<int>(std::ceil(reach / h));
    if (2 * m + 1 >= g.n_points()) {
      throw SolverError("splitting step too large for the grid " + describe_cell(p_));
    }
    // Discrete and continuous minima differ by at most h^2 max(phi'') / 8.
    const double curvature =
        1.0 / (p_.hamiltonian.theta() * dt) + detail::max_second_difference(g, u);
    const detail::HopfLaxScan scan{g, lagrangian_, dt, m, 0.25 * h * h * curvature};
    const std::vector<double> old = u;
    if (g.dim() == 1) {
      detail::hopf_lax_min_1d(scan, old, detail::PeriodicCubic1D(old, h), u);
    } else {
      detail::hopf_lax_min_2d(scan, old, detail::PeriodicCubic2D(old, g.n_points(), h), u);
    }
  }

  const ProblemSpec& p_;
  const SolverOptions& opt_;
  Lagrangian lagrangian_;
  std::size_t n_;
  std::vector<double> symbol_;
  std::vector<Complex> spec_, scratch_;
  std::vector<double> factor_;
};

}  // namespace

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::automatic: return "auto";
    case Scheme::integrating_factor_rk4: return "ifrk4";
    case Scheme::hopf_lax_splitting: return "splitting";
  }
  return "auto";
}

Scheme parse_scheme(std::string_view text) {
  if (text == "auto") return Scheme::automatic;
  if (text == "ifrk4") return Scheme::integrating_factor_rk4;
  if (text == "splitting") return Scheme::hopf_lax_splitting;
  throw std::invalid_argument("unknown scheme '" + std::string(text) + "'");
}

Scheme resolve_scheme(Scheme requested, double s, const Hamiltonian& H) {
  if (requested != Scheme::automatic) return requested;
  (void)s;
  return H.uniformly_convex() ? Scheme::hopf_lax_splitting : Scheme::integrating_factor_rk4;
}

const Field& Trajectory::at(double t) const {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (std::abs(times[i] - t) <= 1e-12 * std::max(1.0, std::abs(t))) return snapshots[i];
  }
  throw std::out_of_range("no snapshot at the requested time");
}

std::vector<double> uniform_times(double T, int count) {
  if (count < 1) throw std::invalid_argument("snapshot count must be positive");
  std::vector<double> out;
  for (int j = 1; j <= count; ++j) out.push_back(j == count ? T : T * j / count);
  return out;
}

int resolution_rule(double epsilon, double s, int cells, int min_points, int max_points) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("resolution rule needs epsilon > 0");
  const double width = std::pow(epsilon, 1.0 / (2.0 * s));
  const double needed = cells * kTwoPi / width;
  if (needed > max_points) return max_points;
  return std::max(min_points, next_power_of_two(static_cast<int>(std::ceil(needed))));
}

Trajectory viscous_solve(const ProblemSpec& problem, const SolverOptions& options,
                         std::span<const double> snapshot_times) {
  problem.validate(false);
  const Scheme scheme = resolve_scheme(options.scheme, problem.s, problem.hamiltonian);
  if (scheme == Scheme::integrating_factor_rk4) {
    if (!(options.dt_cfl > 0.0 && options.dt_cfl <= 0.5)) {
      throw std::invalid_argument("dt_cfl must lie in (0, 0.5]");
    }
    SpectralIntegrator integrator(problem, options);
    return integrator.run(snapshot_times);
  }
  if (!(options.splitting_dt > 0.0)) throw std::invalid_argument("splitting_dt must be positive");
  if (!problem.hamiltonian.uniformly_convex()) {
    throw std::invalid_argument("the splitting scheme needs a uniformly convex Hamiltonian");
  }
  SplittingIntegrator integrator(problem, options);
  return integrator.run(snapshot_times);
}

}  // namespace fracvisc
