#pragma once

// Discrete Hopf-Lax minimisation shared by the splitting scheme and the
// inviscid oracle:  out(x) = min_y [ v(y) + t L((x - y) / t) ].
// Candidates are scanned on the lattice x + o h, |o| <= reach, and every
// near-optimal discrete local minimum is refined with Brent on a continuous
// evaluator of v.

#include <boost/math/tools/minima.hpp>

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

#include "fracvisc/hamiltonian.hpp"
#include "fracvisc/torus.hpp"

namespace fracvisc::detail {

inline constexpr int kBrentBits = 40;

inline int wrap(int i, int n) {
  const int r = i % n;
  return r < 0 ? r + n : r;
}

// Cubic Lagrange weights on nodes 0..3 at local coordinate z.
inline void cubic_weights(double z, double w[4]) {
  const double a = z, b = z - 1.0, c = z - 2.0, d = z - 3.0;
  w[0] = -b * c * d / 6.0;
  w[1] = a * c * d / 2.0;
  w[2] = -a * b * d / 2.0;
  w[3] = a * b * c / 6.0;
}

// Periodic piecewise cubic. A cell uses the centred stencil unless a
// one-sided one has a much smaller third difference (ENO-style), so kinks
// do not leak into neighbouring cells.
class PeriodicCubic1D {
 public:
  PeriodicCubic1D(std::span<const double> u, double h)
      : u_(u), h_(h), n_(static_cast<int>(u.size())) {}

  double operator()(double y) const {
    const double z = y / h_;
    const double jf = std::floor(z);
    const int j = static_cast<int>(jf);
    const int start = stencil_start(j);
    double w[4];
    cubic_weights(z - (jf + (start - j)), w);
    double sum = 0.0;
    for (int m = 0; m < 4; ++m) sum += w[m] * at(start + m);
    return sum;
  }

 private:
  double at(int i) const { return u_[wrap(i, n_)]; }
  double third_difference(int s) const {
    return at(s + 3) - 3.0 * at(s + 2) + 3.0 * at(s + 1) - at(s);
  }
  int stencil_start(int j) const {
    const double centred = std::abs(third_difference(j - 1));
    const double left = std::abs(third_difference(j - 2));
    const double right = std::abs(third_difference(j));
    if (centred <= 2.0 * std::min(left, right)) return j - 1;
    return left < right ? j - 2 : j;
  }

  std::span<const double> u_;
  double h_;
  int n_;
};

// Tensor-product centred cubic on an n x n periodic lattice.
class PeriodicCubic2D {
 public:
  PeriodicCubic2D(std::span<const double> u, int n, double h) : u_(u), n_(n), h_(h) {}

  double operator()(double y0, double y1) const {
    const double z0 = y0 / h_, z1 = y1 / h_;
    const double f0 = std::floor(z0), f1 = std::floor(z1);
    const int j0 = static_cast<int>(f0), j1 = static_cast<int>(f1);
    double w0[4], w1[4];
    cubic_weights(z0 - f0 + 1.0, w0);
    cubic_weights(z1 - f1 + 1.0, w1);
    double sum = 0.0;
    for (int a = 0; a < 4; ++a) {
      const auto row = static_cast<std::size_t>(wrap(j0 - 1 + a, n_)) * n_;
      double acc = 0.0;
      for (int b = 0; b < 4; ++b) acc += w1[b] * u_[row + wrap(j1 - 1 + b, n_)];
      sum += w0[a] * acc;
    }
    return sum;
  }

 private:
  std::span<const double> u_;
  int n_;
  double h_;
};

// Largest |D_pH| over the one-sided difference quotients of nodal values.
inline double one_sided_speed(const TorusGrid& g, std::span<const double> u,
                              const Hamiltonian& H) {
  const double h = g.spacing();
  const int n = g.n_points();
  double best = 0.0;
  Vec p(g.dim());
  if (g.dim() == 1) {
    for (int i = 0; i < n; ++i) {
      p[0] = (u[wrap(i + 1, n)] - u[i]) / h;
      best = std::max(best, H.gradient(p).norm());
    }
    return best;
  }
  auto at = [&](int i, int j) { return u[static_cast<std::size_t>(wrap(i, n)) * n + wrap(j, n)]; };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double c = at(i, j);
      const double fx = (at(i + 1, j) - c) / h, bx = (c - at(i - 1, j)) / h;
      const double fy = (at(i, j + 1) - c) / h, by = (c - at(i, j - 1)) / h;
      for (double a : {fx, bx}) {
        for (double b : {fy, by}) {
          p[0] = a;
          p[1] = b;
          best = std::max(best, H.gradient(p).norm());
        }
      }
    }
  }
  return best;
}

// Upper bound on second differences, used for the refinement slack.
inline double max_second_difference(const TorusGrid& g, std::span<const double> u) {
  const double h = g.spacing();
  const int n = g.n_points();
  double best = 0.0;
  if (g.dim() == 1) {
    for (int i = 0; i < n; ++i) {
      best = std::max(best, std::abs(u[wrap(i + 1, n)] - 2.0 * u[i] + u[wrap(i - 1, n)]) / (h * h));
    }
    return best;
  }
  auto at = [&](int i, int j) { return u[static_cast<std::size_t>(wrap(i, n)) * n + wrap(j, n)]; };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double c = at(i, j);
      const double xx = std::abs(at(i + 1, j) - 2.0 * c + at(i - 1, j));
      const double yy = std::abs(at(i, j + 1) - 2.0 * c + at(i, j - 1));
      const double xy = std::abs(at(i + 1, j + 1) - at(i + 1, j - 1) - at(i - 1, j + 1) +
                                 at(i - 1, j - 1)) / 4.0;
      best = std::max(best, (xx + yy + 2.0 * xy) / (h * h));
    }
  }
  return best;
}

struct HopfLaxScan {
  const TorusGrid& grid;
  const Lagrangian& lagrangian;
  double t;
  int reach;
  double slack;
};

inline double action(const Lagrangian& L, double t, double d0) {
  Vec q(1);
  q[0] = d0 / t;
  return t * L(q);
}
inline double action(const Lagrangian& L, double t, double d0, double d1) {
  Vec q(2);
  q[0] = d0 / t;
  q[1] = d1 / t;
  return t * L(q);
}

// 1D: `nodes` are v at the grid nodes, `v` evaluates anywhere (periodic).
template <class Eval>
void hopf_lax_min_1d(const HopfLaxScan& scan, std::span<const double> nodes, const Eval& v,
                     std::span<double> out) {
  const int n = scan.grid.n_points();
  const double h = scan.grid.spacing();
  const int m = scan.reach;
  std::vector<double> offset_cost(2 * m + 1), phi(2 * m + 1);
  for (int o = -m; o <= m; ++o) offset_cost[o + m] = action(scan.lagrangian, scan.t, -o * h);
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int o = -m; o <= m; ++o) {
      phi[o + m] = nodes[wrap(i + o, n)] + offset_cost[o + m];
      best = std::min(best, phi[o + m]);
    }
    double result = best;
    const double x = i * h;
    for (int o = -m + 1; o < m; ++o) {
      const double val = phi[o + m];
      if (val > best + scan.slack || val > phi[o + m - 1] || val > phi[o + m + 1]) continue;
      auto objective = [&](double y) { return v(y) + action(scan.lagrangian, scan.t, x - y); };
      const auto r = boost::math::tools::brent_find_minima(objective, x + (o - 1) * h,
                                                           x + (o + 1) * h, kBrentBits);
      result = std::min(result, r.second);
    }
    out[i] = result;
  }
}

template <class Eval>
double refine_2d(const HopfLaxScan& scan, const Eval& v, double x0, double x1, int a, int b) {
  const double h = scan.grid.spacing();
  double y0 = x0 + a * h, y1 = x1 + b * h;
  auto objective = [&](double z0, double z1) {
    return v(z0, z1) + action(scan.lagrangian, scan.t, x0 - z0, x1 - z1);
  };
  double value = objective(y0, y1);
  for (int sweep = 0; sweep < 40; ++sweep) {
    const double p0 = y0, p1 = y1;
    const auto r0 = boost::math::tools::brent_find_minima(
        [&](double z) { return objective(z, y1); }, x0 + (a - 1) * h, x0 + (a + 1) * h, kBrentBits);
    y0 = r0.first;
    const auto r1 = boost::math::tools::brent_find_minima(
        [&](double z) { return objective(y0, z); }, x1 + (b - 1) * h, x1 + (b + 1) * h, kBrentBits);
    y1 = r1.first;
    value = std::min({value, r0.second, r1.second});
    if (std::abs(y0 - p0) + std::abs(y1 - p1) < 1e-11) break;
  }
  return value;
}

template <class Eval>
void hopf_lax_min_2d(const HopfLaxScan& scan, std::span<const double> nodes, const Eval& v,
                     std::span<double> out) {
  const int n = scan.grid.n_points();
  const double h = scan.grid.spacing();
  const int m = scan.reach;
  const int w = 2 * m + 1;
  auto idx = [w, m](int a, int b) { return static_cast<std::size_t>(a + m) * w + (b + m); };
  std::vector<double> offset_cost(static_cast<std::size_t>(w) * w), phi(offset_cost.size());
  for (int a = -m; a <= m; ++a) {
    for (int b = -m; b <= m; ++b) offset_cost[idx(a, b)] = action(scan.lagrangian, scan.t, -a * h, -b * h);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double best = std::numeric_limits<double>::infinity();
      for (int a = -m; a <= m; ++a) {
        const auto row = static_cast<std::size_t>(wrap(i + a, n)) * n;
        for (int b = -m; b <= m; ++b) {
          const double val = nodes[row + wrap(j + b, n)] + offset_cost[idx(a, b)];
          phi[idx(a, b)] = val;
          best = std::min(best, val);
        }
      }
      double result = best;
      for (int a = -m + 1; a < m; ++a) {
        for (int b = -m + 1; b < m; ++b) {
          const double val = phi[idx(a, b)];
          if (val > best + scan.slack) continue;
          bool local = true;
          for (int da = -1; da <= 1 && local; ++da) {
            for (int db = -1; db <= 1; ++db) {
              if (val > phi[idx(a + da, b + db)]) {
                local = false;
                break;
              }
            }
          }
          if (local) result = std::min(result, refine_2d(scan, v, i * h, j * h, a, b));
        }
      }
      out[static_cast<std::size_t>(i) * n + j] = result;
    }
  }
}

}  // namespace fracvisc::detail
