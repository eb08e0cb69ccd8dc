#include "fracvisc/dual_transport.hpp"

#include <boost/math/special_functions/legendre.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "fft.hpp"

namespace fracvisc {

namespace {

int wrap(int i, int n) {
  const int r = i % n;
  return r < 0 ? r + n : r;
}

bool same_time(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

// Gauss-Legendre rule mapped to [0, 1].
void gauss_legendre_unit(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  const auto zeros = boost::math::legendre_p_zeros<double>(n);
  nodes.clear();
  weights.clear();
  for (double x : zeros) {
    const double d = boost::math::legendre_p_prime(n, x);
    const double w = 2.0 / ((1.0 - x * x) * d * d);
    nodes.push_back(0.5 * (1.0 + x));
    weights.push_back(0.5 * w);
    if (x != 0.0) {
      nodes.push_back(0.5 * (1.0 - x));
      weights.push_back(0.5 * w);
    }
  }
}

// Gradient components of u at the points of `layout`, one Field per axis.
std::vector<Field> layout_gradient(const Field& u, DriftLayout layout) {
  const auto& g = u.grid();
  if (layout == DriftLayout::nodal) {
    return spectral_gradient(inverse(dealias(forward(u))));
  }
  const int n = g.n_points();
  const double h = g.spacing();
  std::vector<Field> out;
  if (g.dim() == 1) {
    Field d(g);
    for (int i = 0; i < n; ++i) d[i] = (u[wrap(i + 1, n)] - u[i]) / h;
    out.push_back(std::move(d));
    return out;
  }
  auto at = [&](int i, int j) { return u[static_cast<std::size_t>(wrap(i, n)) * n + wrap(j, n)]; };
  Field d0(g), d1(g);  // d0 at (i+1/2, j), d1 at (i, j+1/2)
  Field f0(g), f1(g);  // tangential components at the same faces
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const auto k = static_cast<std::size_t>(i) * n + j;
      d0[k] = (at(i + 1, j) - at(i, j)) / h;
      f0[k] = 0.25 * (at(i, j + 1) - at(i, j - 1) + at(i + 1, j + 1) - at(i + 1, j - 1)) / h;
      d1[k] = (at(i, j + 1) - at(i, j)) / h;
      f1[k] = 0.25 * (at(i + 1, j) - at(i - 1, j) + at(i + 1, j + 1) - at(i - 1, j + 1)) / h;
    }
  }
  // Axis-0 face carries (d0, f0); axis-1 face carries (f1, d1).
  out.push_back(std::move(d0));
  out.push_back(std::move(f0));
  out.push_back(std::move(f1));
  out.push_back(std::move(d1));
  return out;
}

std::vector<Field> drift_from_gradients(const std::vector<Field>& ge, const std::vector<Field>& gn,
                                        const Hamiltonian& H, DriftLayout layout,
                                        const std::vector<double>& zn, const std::vector<double>& zw) {
  const auto& g = ge[0].grid();
  const int dim = g.dim();
  std::vector<Field> b(dim, Field(g));
  Vec p(dim);
  // For each axis, the momentum components at that axis' sample points.
  for (int axis = 0; axis < dim; ++axis) {
    auto comp = [&](const std::vector<Field>& grad, int c, std::size_t i) {
      if (layout == DriftLayout::nodal || dim == 1) return grad[c][i];
      return grad[2 * axis + c][i];
    };
    for (std::size_t i = 0; i < g.size(); ++i) {
      double acc = 0.0;
      for (std::size_t z = 0; z < zn.size(); ++z) {
        for (int c = 0; c < dim; ++c) p[c] = zn[z] * comp(ge, c, i) + (1.0 - zn[z]) * comp(gn, c, i);
        acc += zw[z] * H.gradient(p)[axis];
      }
      b[axis][i] = -acc;
    }
  }
  return b;
}

void check_guard(std::span<const double> r, double limit, double t) {
  for (double v : r) {
    if (!std::isfinite(v) || std::abs(v) > limit) {
      std::ostringstream msg;
      msg << "dual solve blow-up at reversed time " << t;
      throw SolverError(msg.str());
    }
  }
}

// ------------------------------------------------------------ schemes

class SpectralDual {
 public:
  SpectralDual(const DriftField& drift, double eta, const DualOptions& opt)
      : d_(drift), eta_(eta), opt_(opt), table_(drift.grid), n_(drift.grid.size()),
        symbol_(n_), scratch_(n_), work_(n_), nodal_(n_), flux_(n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      symbol_[i] = fractional_symbol(d_.grid, i, d_.s, FractionalSymbol::fourier);
    }
  }

  // -div(b r), dealiased.
  void rhs(std::span<const Complex> r_hat, const std::vector<Field>& b, std::span<Complex> out) {
    detail::fft_inverse_real(d_.grid, r_hat, scratch_, nodal_);
    std::fill(out.begin(), out.end(), Complex{});
    for (int axis = 0; axis < d_.grid.dim(); ++axis) {
      for (std::size_t i = 0; i < n_; ++i) flux_[i] = b[axis][i] * nodal_[i];
      detail::fft_forward_real(d_.grid, flux_, scratch_, work_);
      for (std::size_t i = 0; i < n_; ++i) out[i] -= Complex(0.0, table_.k[axis][i]) * work_[i];
    }
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
      throw SolverError("dual solve under-resolved: spectral tail fraction above limit");
    }
  }

  // Advances r_hat from reversed time a to b; the drift is read at tau - sigma.
  void advance(std::vector<Complex>& r, double tau, double a, double b) {
    std::vector<Complex> k1(n_), k2(n_), k3(n_), k4(n_), stage(n_);
    std::vector<double> eh(n_), ef(n_);
    const double h = d_.grid.spacing();
    double sigma = a;
    while (sigma < b) {
      const auto b0 = d_.at(tau - sigma);
      double bmax = 0.0;
      for (const auto& c : b0) bmax = std::max(bmax, lp_norm(c, kInfinity));
      double dt = opt_.dt_cfl * h / std::max(1.0, bmax);
      bool lands = false;
      if (sigma + dt >= b - 1e-12 * std::max(1.0, b)) {
        dt = b - sigma;
        lands = true;
      }
      for (std::size_t i = 0; i < n_; ++i) {
        eh[i] = std::exp(-0.5 * eta_ * symbol_[i] * dt);
        ef[i] = eh[i] * eh[i];
      }
      const auto bm = d_.at(tau - sigma - 0.5 * dt);
      const auto b1 = d_.at(tau - sigma - dt);
      rhs(r, b0, k1);
      for (std::size_t i = 0; i < n_; ++i) stage[i] = eh[i] * (r[i] + 0.5 * dt * k1[i]);
      rhs(stage, bm, k2);
      for (std::size_t i = 0; i < n_; ++i) stage[i] = eh[i] * r[i] + 0.5 * dt * k2[i];
      rhs(stage, bm, k3);
      for (std::size_t i = 0; i < n_; ++i) stage[i] = ef[i] * r[i] + dt * eh[i] * k3[i];
      rhs(stage, b1, k4);
      for (std::size_t i = 0; i < n_; ++i) {
        r[i] = ef[i] * r[i] + dt / 6.0 * (ef[i] * k1[i] + 2.0 * eh[i] * (k2[i] + k3[i]) + k4[i]);
      }
      sigma = lands ? b : sigma + dt;
      detail::fft_inverse_real(d_.grid, r, scratch_, nodal_);
      check_guard(nodal_, opt_.blowup_limit, sigma);
    }
  }

  Field run(const Field& alpha, double tau, const std::vector<double>& sigmas,
            std::vector<Field>& out) {
    std::vector<Complex> r(n_);
    detail::fft_forward_real(d_.grid, alpha.values(), scratch_, r);
    double sigma = 0.0;
    for (double target : sigmas) {
      advance(r, tau, sigma, target);
      sigma = target;
      std::vector<double> v(n_);
      detail::fft_inverse_real(d_.grid, r, scratch_, v);
      out.emplace_back(d_.grid, std::move(v));
    }
    return out.back();
  }

 private:
  const DriftField& d_;
  double eta_;
  const DualOptions& opt_;
  detail::WaveTable table_;
  std::size_t n_;
  std::vector<double> symbol_;
  std::vector<Complex> scratch_, work_;
  std::vector<double> nodal_, flux_;
};

class FiniteVolumeDual {
 public:
  FiniteVolumeDual(const DriftField& drift, double eta, const DualOptions& opt)
      : d_(drift), eta_(eta), opt_(opt), n_(drift.grid.size()), symbol_(n_), spec_(n_),
        scratch_(n_), factor_(n_) {
    for (std::size_t i = 0; i < n_; ++i) {
      symbol_[i] = fractional_symbol(d_.grid, i, d_.s, FractionalSymbol::grid_laplacian);
    }
  }

  // Face value of r at x + h/2 along a line: first-order upwind or
  // minmod-limited linear reconstruction from the upwind side.
  double face_value(double v, double rm, double r0, double r1, double r2) const {
    if (opt_.flux == FluxScheme::upwind) return v > 0.0 ? r0 : r1;
    auto minmod = [](double x, double y) {
      if (x * y <= 0.0) return 0.0;
      return x > 0.0 ? std::min(x, y) : std::max(x, y);
    };
    return v > 0.0 ? r0 + 0.5 * minmod(r0 - rm, r1 - r0) : r1 - 0.5 * minmod(r1 - r0, r2 - r1);
  }

  // out = -div_h(b r).
  void flux_divergence(const std::vector<double>& r, const std::vector<Field>& b,
                       std::vector<double>& out) const {
    const auto& g = d_.grid;
    const int n = g.n_points();
    const double inv_h = 1.0 / g.spacing();
    std::fill(out.begin(), out.end(), 0.0);
    std::vector<double> flux(n);
    auto sweep = [&](auto index, const Field& comp) {
      // index(i) is the flat node of the i-th point of the line.
      for (int i = 0; i < n; ++i) {
        const double v = comp[index(i)];
        flux[i] = v * face_value(v, r[index(wrap(i - 1, n))], r[index(i)], r[index(wrap(i + 1, n))],
                                 r[index(wrap(i + 2, n))]);
      }
      for (int i = 0; i < n; ++i) out[index(i)] -= (flux[i] - flux[wrap(i - 1, n)]) * inv_h;
    };
    if (g.dim() == 1) {
      sweep([](int i) { return static_cast<std::size_t>(i); }, b[0]);
      return;
    }
    for (int line = 0; line < n; ++line) {
      sweep([&](int i) { return static_cast<std::size_t>(i) * n + line; }, b[0]);
      sweep([&](int j) { return static_cast<std::size_t>(line) * n + j; }, b[1]);
    }
  }

  // Forward Euler for upwind fluxes, SSP-RK2 for limited ones.
  void transport(std::vector<double>& r, const std::vector<Field>& b, double dt) const {
    std::vector<double> k(r.size());
    flux_divergence(r, b, k);
    if (opt_.flux == FluxScheme::upwind) {
      for (std::size_t i = 0; i < r.size(); ++i) r[i] += dt * k[i];
      return;
    }
    std::vector<double> stage(r.size());
    for (std::size_t i = 0; i < r.size(); ++i) stage[i] = r[i] + dt * k[i];
    flux_divergence(stage, b, k);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = 0.5 * (r[i] + stage[i] + dt * k[i]);
  }

  void heat(std::vector<double>& r) {
    if (eta_ == 0.0) return;
    detail::fft_forward_real(d_.grid, r, scratch_, spec_);
    for (std::size_t i = 0; i < n_; ++i) spec_[i] *= factor_[i];
    detail::fft_inverse_real(d_.grid, spec_, scratch_, r);
  }

  void advance(std::vector<double>& r, double tau, double a, double b) {
    const double h = d_.grid.spacing();
    double speed = 0.0;
    for (const auto& snap : d_.components) {
      double sum = 0.0;
      for (const auto& comp : snap) sum += lp_norm(comp, kInfinity);
      speed = std::max(speed, sum);
    }
    const double dt_max = opt_.dt_cfl * h / std::max(1e-12, speed);
    const int steps = std::max(1, static_cast<int>(std::ceil((b - a) / dt_max - 1e-9)));
    const double dt = (b - a) / steps;
    for (std::size_t i = 0; i < n_; ++i) factor_[i] = std::exp(-0.5 * eta_ * symbol_[i] * dt);
    for (int k = 0; k < steps; ++k) {
      const double mid = a + (k + 0.5) * dt;
      heat(r);
      transport(r, d_.at(tau - mid), dt);
      heat(r);
      check_guard(r, opt_.blowup_limit, a + (k + 1) * dt);
    }
  }

  void run(const Field& alpha, double tau, const std::vector<double>& sigmas,
           std::vector<Field>& out) {
    std::vector<double> r(alpha.values().begin(), alpha.values().end());
    double sigma = 0.0;
    for (double target : sigmas) {
      advance(r, tau, sigma, target);
      sigma = target;
      out.emplace_back(d_.grid, r);
    }
  }

 private:
  const DriftField& d_;
  double eta_;
  const DualOptions& opt_;
  std::size_t n_;
  std::vector<double> symbol_;
  std::vector<Complex> spec_, scratch_;
  std::vector<double> factor_;
};

}  // namespace

// ------------------------------------------------------------ DriftField

Field DriftField::divergence(std::size_t j) const {
  const auto& comps = components.at(j);
  if (layout == DriftLayout::nodal) {
    SpectralField total(grid);
    const detail::WaveTable table(grid);
    for (int axis = 0; axis < grid.dim(); ++axis) {
      const auto c = forward(comps[axis]);
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (grid.axis_index(i, axis) == grid.n_points() / 2) continue;
        total[i] += Complex(0.0, table.k[axis][i]) * c[i];
      }
    }
    return inverse(total);
  }
  const int n = grid.n_points();
  const double h = grid.spacing();
  Field div(grid);
  if (grid.dim() == 1) {
    for (int i = 0; i < n; ++i) div[i] = (comps[0][i] - comps[0][wrap(i - 1, n)]) / h;
    return div;
  }
  auto idx = [n](int i, int j) { return static_cast<std::size_t>(wrap(i, n)) * n + wrap(j, n); };
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) {
      div[idx(i, k)] = (comps[0][idx(i, k)] - comps[0][idx(i - 1, k)] + comps[1][idx(i, k)] -
                        comps[1][idx(i, k - 1)]) / h;
    }
  }
  return div;
}

void DriftField::refresh_profiles() {
  div_minus.clear();
  div_min.clear();
  for (std::size_t j = 0; j < times.size(); ++j) {
    const double m = divergence(j).min();
    div_min.push_back(m);
    div_minus.push_back(std::max(0.0, -m));
  }
}

double DriftField::sup_abs() const {
  double best = 0.0;
  for (const auto& snap : components) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double sq = 0.0;
      for (const auto& c : snap) sq += c[i] * c[i];
      best = std::max(best, std::sqrt(sq));
    }
  }
  return best;
}

double DriftField::div_minus_integral(double a, double b) const {
  if (times.size() == 1) return div_minus[0] * (b - a);
  auto value = [&](double t) {
    const auto it = std::upper_bound(times.begin(), times.end(), t);
    const std::size_t j = std::clamp<std::size_t>(it - times.begin(), 1, times.size() - 1);
    const double w = (t - times[j - 1]) / (times[j] - times[j - 1]);
    return (1.0 - w) * div_minus[j - 1] + w * div_minus[j];
  };
  // Exact for the piecewise-linear profile: trapezoid on the merged breakpoints.
  std::vector<double> pts{a};
  for (double t : times) {
    if (t > a && t < b) pts.push_back(t);
  }
  pts.push_back(b);
  double sum = 0.0;
  for (std::size_t i = 1; i < pts.size(); ++i) {
    sum += 0.5 * (pts[i] - pts[i - 1]) * (value(pts[i - 1]) + value(pts[i]));
  }
  return sum;
}

std::vector<Field> DriftField::at(double t) const {
  if (times.size() == 1) return components[0];
  const double tc = std::clamp(t, times.front(), times.back());
  const auto it = std::upper_bound(times.begin(), times.end(), tc);
  const std::size_t j = std::clamp<std::size_t>(it - times.begin(), 1, times.size() - 1);
  const double w = (tc - times[j - 1]) / (times[j] - times[j - 1]);
  if (w == 0.0) return components[j - 1];
  if (w == 1.0) return components[j];
  std::vector<Field> out;
  for (std::size_t axis = 0; axis < components[j].size(); ++axis) {
    out.push_back((1.0 - w) * components[j - 1][axis] + w * components[j][axis]);
  }
  return out;
}

DriftField DriftField::from_function(
    const TorusGrid& grid, DriftLayout layout, std::vector<double> times,
    const std::function<double(std::span<const double>, double, int)>& b, double s) {
  if (times.empty()) throw std::invalid_argument("drift needs at least one time");
  DriftField d{.grid = grid, .layout = layout, .s = s, .times = std::move(times)};
  const double h = grid.spacing();
  for (double t : d.times) {
    std::vector<Field> snap;
    for (int axis = 0; axis < grid.dim(); ++axis) {
      Field c(grid);
      double x[2];
      for (std::size_t i = 0; i < grid.size(); ++i) {
        grid.node_coordinates(i, std::span<double>(x, grid.dim()));
        if (layout == DriftLayout::face) x[axis] += 0.5 * h;
        c[i] = b(std::span<const double>(x, grid.dim()), t, axis);
      }
      snap.push_back(std::move(c));
    }
    d.components.push_back(std::move(snap));
  }
  d.source = "function";
  d.refresh_profiles();
  return d;
}

DriftField build_drift(const Trajectory& traj_eps, const Trajectory& traj_eta,
                       const Hamiltonian& H, int zeta_nodes, DriftLayout layout) {
  if (zeta_nodes < 1) throw std::invalid_argument("zeta_nodes must be positive");
  if (!(traj_eps.grid == traj_eta.grid)) throw std::invalid_argument("drift trajectories differ in grid");
  if (traj_eps.times.size() != traj_eta.times.size()) {
    throw std::invalid_argument("drift trajectories differ in snapshot times");
  }
  for (std::size_t j = 0; j < traj_eps.times.size(); ++j) {
    if (!same_time(traj_eps.times[j], traj_eta.times[j])) {
      throw std::invalid_argument("drift trajectories differ in snapshot times");
    }
  }
  std::vector<double> zn, zw;
  gauss_legendre_unit(zeta_nodes, zn, zw);
  DriftField d{.grid = traj_eps.grid, .layout = layout, .s = traj_eps.s, .times = traj_eps.times};
  for (std::size_t j = 0; j < traj_eps.size(); ++j) {
    const auto ge = layout_gradient(traj_eps.snapshots[j], layout);
    const auto gn = layout_gradient(traj_eta.snapshots[j], layout);
    d.components.push_back(drift_from_gradients(ge, gn, H, layout, zn, zw));
  }
  d.zeta_nodes = zeta_nodes;
  std::ostringstream src;
  src << "eps=" << traj_eps.epsilon << ",eta=" << traj_eta.epsilon;
  d.source = src.str();
  d.refresh_profiles();
  return d;
}

// ------------------------------------------------------------ dual solve

const Field& DualSolution::at(double t) const {
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (same_time(times[i], t)) return snapshots[i];
  }
  throw std::out_of_range("no dual snapshot at the requested time");
}

DualSolution dual_solve(const DriftField& drift, double eta, const Field& alpha, double tau,
                        const DualOptions& options) {
  if (!(eta >= 0.0)) throw std::invalid_argument("eta must be >= 0");
  if (!(alpha.grid() == drift.grid)) throw std::invalid_argument("alpha lives on another grid");
  if (alpha.min() < 0.0) throw std::invalid_argument("alpha must be nonnegative");
  if (!(tau > 0.0) || tau > drift.times.back() * (1.0 + 1e-12) + 1e-14 ||
      (drift.times.size() > 1 && tau < drift.times.front())) {
    throw std::invalid_argument("tau outside the drift's time range");
  }
  if (!(options.dt_cfl > 0.0 && options.dt_cfl <= 1.0)) {
    throw std::invalid_argument("dual dt_cfl must lie in (0, 1]");
  }
  // Physical output times: drift times below tau, then tau.
  std::vector<double> phys;
  for (double t : drift.times) {
    if (t < tau && !same_time(t, tau)) phys.push_back(t);
  }
  std::vector<double> sigmas;
  for (auto it = phys.rbegin(); it != phys.rend(); ++it) sigmas.push_back(tau - *it);
  std::vector<Field> reversed;
  if (!sigmas.empty()) {
    if (drift.layout == DriftLayout::nodal) {
      SpectralDual scheme(drift, eta, options);
      scheme.run(alpha, tau, sigmas, reversed);
    } else {
      FiniteVolumeDual scheme(drift, eta, options);
      scheme.run(alpha, tau, sigmas, reversed);
    }
  }
  DualSolution sol{.grid = drift.grid, .eta = eta, .tau = tau, .alpha = alpha};
  for (std::size_t i = 0; i < phys.size(); ++i) {
    sol.times.push_back(phys[i]);
    sol.snapshots.push_back(reversed[reversed.size() - 1 - i]);
  }
  sol.times.push_back(tau);
  sol.snapshots.push_back(alpha);
  for (const auto& r : sol.snapshots) {
    sol.mean.push_back(mean(r));
    sol.min.push_back(r.min());
  }
  return sol;
}

// ------------------------------------------------------------ checks

GronwallReport gronwall_check(const DualSolution& sol, const DriftField& drift, double q,
                              double slack) {
  if (!(q > 1.0)) throw std::invalid_argument("q must exceed 1");
  GronwallReport rep{.q = q};
  rep.constant = std::exp((q - 1.0) * drift.div_minus_integral(0.0, sol.tau) / q);
  const double alpha_q = std::pow(lp_norm(sol.alpha, q), q);
  rep.worst_margin = kInfinity;
  for (std::size_t i = 0; i < sol.times.size(); ++i) {
    const double t = sol.times[i];
    GronwallEntry e{.time = t,
                    .norm_q = std::pow(lp_norm(sol.snapshots[i], q), q),
                    .bound = std::exp((q - 1.0) * drift.div_minus_integral(t, sol.tau)) * alpha_q,
                    .margin = 0.0};
    e.margin = e.bound > 0.0 ? 1.0 - e.norm_q / e.bound : (e.norm_q == 0.0 ? 0.0 : -kInfinity);
    if (!same_time(t, sol.tau)) rep.worst_margin = std::min(rep.worst_margin, e.margin);
    if (e.norm_q > (1.0 + slack) * e.bound) rep.pass = false;
    rep.entries.push_back(e);
  }
  return rep;
}

double riccati_gronwall_constant(const ProblemSpec& problem, double tau, double q) {
  const double theta = problem.hamiltonian.theta();
  const double k0 = problem.u0_semiconcavity;
  double integral_k = 0.0;
  if (problem.forcing.is_zero()) {
    integral_k = theta > 0.0 ? std::log1p(theta * k0 * tau) / theta : k0 * tau;
  } else {
    // RK4 on (k, K) with k' = -theta k^2 + c_f and K' = k.
    const int steps = std::max(100, static_cast<int>(std::ceil(tau / 1e-3)));
    const double dt = tau / steps;
    auto f = [&](double tt, double kk) { return -theta * kk * kk + problem.forcing.semiconcavity(tt); };
    double k = k0, t = 0.0;
    for (int i = 0; i < steps; ++i) {
      const double a1 = f(t, k), k2 = k + 0.5 * dt * a1;
      const double a2 = f(t + 0.5 * dt, k2), k3 = k + 0.5 * dt * a2;
      const double a3 = f(t + 0.5 * dt, k3), k4 = k + dt * a3;
      const double a4 = f(t + dt, k4);
      integral_k += dt / 6.0 * (k + 2.0 * k2 + 2.0 * k3 + k4);
      k += dt / 6.0 * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
      t += dt;
    }
  }
  const double n = problem.grid.dim();
  return std::exp((q - 1.0) * n * problem.hamiltonian.Theta() * integral_k / q);
}

DivergenceCheck divergence_lower_bound(const DriftField& drift, std::span<const double> k,
                                       double Theta, double tol) {
  if (k.size() != drift.times.size()) throw std::invalid_argument("k profile length mismatch");
  DivergenceCheck out{.worst = kInfinity};
  const double n = drift.grid.dim();
  for (std::size_t j = 0; j < k.size(); ++j) {
    out.worst = std::min(out.worst, drift.div_min[j] + n * Theta * k[j]);
  }
  out.pass = out.worst >= -tol;
  return out;
}

DualityResidual duality_residual(const Trajectory& traj_eps, const Trajectory& traj_eta,
                                 const DualSolution& dual, double tau) {
  if (!(traj_eps.grid == dual.grid) || !(traj_eta.grid == dual.grid)) {
    throw std::invalid_argument("duality residual: grid mismatch");
  }
  if (!same_time(dual.tau, tau)) throw std::invalid_argument("duality residual: tau mismatch");
  const FractionalSymbol symbol = traj_eps.scheme == Scheme::hopf_lax_splitting
                                      ? FractionalSymbol::grid_laplacian
                                      : FractionalSymbol::fourier;
  DualityResidual r;
  const Field w_tau = traj_eps.at(tau) - traj_eta.at(tau);
  r.lhs = inner_product(w_tau, dual.alpha);
  std::vector<double> integrand;
  for (std::size_t i = 0; i < dual.times.size(); ++i) {
    const Field lap = frac_laplacian(traj_eps.at(dual.times[i]), traj_eps.s, symbol);
    integrand.push_back(-inner_product(lap, dual.snapshots[i]));
  }
  if (dual.times.empty() || !same_time(dual.times.front(), 0.0)) {
    throw std::invalid_argument("duality residual: dual snapshots must start at t = 0");
  }
  double integral = 0.0;
  for (std::size_t i = 1; i < dual.times.size(); ++i) {
    integral += 0.5 * (dual.times[i] - dual.times[i - 1]) * (integrand[i] + integrand[i - 1]);
  }
  r.rhs = (traj_eps.epsilon - traj_eta.epsilon) * integral;
  r.residual = std::abs(r.lhs - r.rhs) / (std::abs(r.lhs) + 1e-14);
  return r;
}

Field dual_datum(const Field& w, double p, bool positive_part) {
  if (!(p > 1.0)) throw std::invalid_argument("dual datum needs p > 1");
  Field a(w.grid());
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double v = positive_part ? std::max(0.0, w[i]) : std::max(0.0, -w[i]);
    a[i] = std::pow(v, p - 1.0);
  }
  const double norm = lp_norm(a, p / (p - 1.0));
  if (norm > 0.0) a *= 1.0 / norm;
  return a;
}

std::vector<std::filesystem::path> export_dual(const DualSolution& sol, double s,
                                               const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  for (std::size_t i = 0; i < sol.times.size(); ++i) {
    auto path = dir / snapshot_filename("rho", s, sol.eta, sol.times[i]);
    write_field_csv(sol.snapshots[i], path);
    written.push_back(std::move(path));
  }
  return written;
}

}  // namespace fracvisc
