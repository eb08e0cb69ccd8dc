#include "fracvisc/torus.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fft.hpp"

namespace fracvisc {

namespace {

void require_same_grid(const TorusGrid& a, const TorusGrid& b) {
  if (!(a == b)) throw std::invalid_argument("fields live on different grids");
}

bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }

// Nyquist frequency along any axis; odd-order derivatives vanish there.
bool on_nyquist(const TorusGrid& g, std::size_t node, int axis) {
  return g.axis_index(node, axis) == g.n_points() / 2;
}

std::vector<Complex> coefficients_of(const Field& f) {
  std::vector<Complex> scratch(f.size()), out(f.size());
  detail::fft_forward_real(f.grid(), f.values(), scratch, out);
  return out;
}

Field field_from(const TorusGrid& g, std::span<const Complex> coefficients) {
  std::vector<Complex> scratch(g.size());
  Field out(g);
  detail::fft_inverse_real(g, coefficients, scratch, out.values());
  return out;
}

}  // namespace

TorusGrid::TorusGrid(int dim, int n_points)
    : dim_(dim), n_(n_points), spacing_(kTwoPi / n_points) {
  if (dim != 1 && dim != 2) {
    throw std::invalid_argument("torus dimension must be 1 or 2, got " +
                                std::to_string(dim));
  }
  if (n_points < 8 || !is_power_of_two(n_points)) {
    throw std::invalid_argument(
        "n_points must be a power of two >= 8, got " + std::to_string(n_points));
  }
}

std::size_t TorusGrid::size() const noexcept {
  return dim_ == 1 ? static_cast<std::size_t>(n_)
                   : static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_);
}

double TorusGrid::cell_volume() const noexcept {
  return dim_ == 1 ? spacing_ : spacing_ * spacing_;
}

int TorusGrid::axis_index(std::size_t node, int axis) const noexcept {
  if (dim_ == 1) return static_cast<int>(node);
  return axis == 0 ? static_cast<int>(node / n_) : static_cast<int>(node % n_);
}

std::size_t TorusGrid::flat_index(std::span<const int> index) const noexcept {
  auto wrap = [this](int i) {
    const int r = i % n_;
    return static_cast<std::size_t>(r < 0 ? r + n_ : r);
  };
  if (dim_ == 1) return wrap(index[0]);
  return wrap(index[0]) * static_cast<std::size_t>(n_) + wrap(index[1]);
}

void TorusGrid::node_coordinates(std::size_t node, std::span<double> x) const noexcept {
  for (int axis = 0; axis < dim_; ++axis) x[axis] = coordinate(axis_index(node, axis));
}

int next_power_of_two(int n) {
  int p = 8;
  while (p < n) p *= 2;
  return p;
}

// ---------------------------------------------------------------- Field

Field::Field(const TorusGrid& grid) : grid_(grid), values_(grid.size(), 0.0) {}

Field::Field(const TorusGrid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw std::invalid_argument("field length " + std::to_string(values_.size()) +
                                " does not match grid size " +
                                std::to_string(grid_.size()));
  }
  if (!all_finite()) throw std::invalid_argument("field has non-finite values");
}

Field Field::sample(const TorusGrid& grid, const PointFunction& f) {
  Field out(grid);
  double x[2] = {0.0, 0.0};
  for (std::size_t node = 0; node < grid.size(); ++node) {
    grid.node_coordinates(node, std::span<double>(x, grid.dim()));
    out.values_[node] = f(std::span<const double>(x, grid.dim()));
  }
  if (!out.all_finite()) throw std::invalid_argument("sampled function is not finite");
  return out;
}

Field Field::constant(const TorusGrid& grid, double c) {
  return Field(grid, std::vector<double>(grid.size(), c));
}

bool Field::all_finite() const noexcept {
  return std::all_of(values_.begin(), values_.end(),
                     [](double v) { return std::isfinite(v); });
}

double Field::max() const { return *std::max_element(values_.begin(), values_.end()); }
double Field::min() const { return *std::min_element(values_.begin(), values_.end()); }

Field& Field::operator+=(const Field& other) {
  require_same_grid(grid_, other.grid_);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(grid_, other.grid_);
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
  return *this;
}

Field& Field::operator*=(double a) noexcept {
  for (auto& v : values_) v *= a;
  return *this;
}

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double a, Field f) { return f *= a; }

// -------------------------------------------------------- SpectralField

SpectralField::SpectralField(const TorusGrid& grid)
    : grid_(grid), coefficients_(grid.size()) {}

SpectralField::SpectralField(const TorusGrid& grid, std::vector<Complex> coefficients)
    : grid_(grid), coefficients_(std::move(coefficients)) {
  if (coefficients_.size() != grid_.size()) {
    throw std::invalid_argument("coefficient count does not match grid size");
  }
}

double SpectralField::hermitian_defect() const {
  double worst = 0.0;
  int idx[2], neg[2];
  for (std::size_t node = 0; node < grid_.size(); ++node) {
    for (int axis = 0; axis < grid_.dim(); ++axis) {
      idx[axis] = grid_.axis_index(node, axis);
      neg[axis] = -idx[axis];
    }
    const auto mirror = grid_.flat_index(std::span<const int>(neg, grid_.dim()));
    worst = std::max(worst, std::abs(coefficients_[mirror] - std::conj(coefficients_[node])));
  }
  return worst;
}

SpectralField forward(const Field& f) { return SpectralField(f.grid(), coefficients_of(f)); }

Field inverse(const SpectralField& f_hat) {
  return field_from(f_hat.grid(), f_hat.coefficients());
}

// ------------------------------------------------------------- operators

double fractional_symbol(const TorusGrid& grid, std::size_t index, double s,
                         FractionalSymbol symbol) {
  double sum = 0.0;
  for (int axis = 0; axis < grid.dim(); ++axis) {
    const double k = grid.wavenumber(grid.axis_index(index, axis));
    if (symbol == FractionalSymbol::fourier) {
      sum += k * k;
    } else {
      const double d = 2.0 * std::sin(0.5 * k * grid.spacing()) / grid.spacing();
      sum += d * d;
    }
  }
  if (sum == 0.0) return 0.0;
  return s == 1.0 ? sum : std::pow(sum, s);
}

Field frac_laplacian(const Field& f, double s, FractionalSymbol symbol) {
  if (!(s > 0.0 && s <= 1.0)) {
    throw std::invalid_argument("fractional order s must lie in (0, 1], got " +
                                std::to_string(s));
  }
  auto c = coefficients_of(f);
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= fractional_symbol(f.grid(), i, s, symbol);
  return field_from(f.grid(), c);
}

std::vector<Field> spectral_gradient(const Field& f) {
  const auto& g = f.grid();
  const auto c = coefficients_of(f);
  std::vector<Field> out;
  std::vector<Complex> d(c.size());
  for (int axis = 0; axis < g.dim(); ++axis) {
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double k = g.wavenumber(g.axis_index(i, axis));
      d[i] = on_nyquist(g, i, axis) ? Complex{} : Complex(0.0, k) * c[i];
    }
    out.push_back(field_from(g, d));
  }
  return out;
}

std::vector<Field> spectral_hessian(const Field& f) {
  const auto& g = f.grid();
  const auto c = coefficients_of(f);
  std::vector<Field> out;
  std::vector<Complex> d(c.size());
  for (int a = 0; a < g.dim(); ++a) {
    for (int b = a; b < g.dim(); ++b) {
      for (std::size_t i = 0; i < c.size(); ++i) {
        const double ka = g.wavenumber(g.axis_index(i, a));
        const double kb = g.wavenumber(g.axis_index(i, b));
        const bool odd_nyquist = a != b && (on_nyquist(g, i, a) || on_nyquist(g, i, b));
        d[i] = odd_nyquist ? Complex{} : -ka * kb * c[i];
      }
      out.push_back(field_from(g, d));
    }
  }
  return out;
}

std::vector<Field> finite_difference_gradient(const Field& f) {
  const auto& g = f.grid();
  const double inv = 1.0 / (2.0 * g.spacing());
  std::vector<Field> out;
  int idx[2];
  for (int axis = 0; axis < g.dim(); ++axis) {
    Field d(g);
    for (std::size_t node = 0; node < g.size(); ++node) {
      for (int a = 0; a < g.dim(); ++a) idx[a] = g.axis_index(node, a);
      idx[axis] += 1;
      const double up = f[g.flat_index(std::span<const int>(idx, g.dim()))];
      idx[axis] -= 2;
      const double down = f[g.flat_index(std::span<const int>(idx, g.dim()))];
      d[node] = (up - down) * inv;
    }
    out.push_back(std::move(d));
  }
  return out;
}

std::vector<Field> finite_difference_hessian(const Field& f) {
  const auto& g = f.grid();
  const double h2 = g.spacing() * g.spacing();
  const int dim = g.dim();
  auto at = [&](std::size_t node, int da, int db) {
    int idx[2];
    for (int a = 0; a < dim; ++a) idx[a] = g.axis_index(node, a);
    idx[0] += da;
    if (dim == 2) idx[1] += db;
    return f[g.flat_index(std::span<const int>(idx, dim))];
  };
  std::vector<Field> out;
  Field xx(g);
  for (std::size_t node = 0; node < g.size(); ++node) {
    xx[node] = (at(node, 1, 0) - 2.0 * f[node] + at(node, -1, 0)) / h2;
  }
  out.push_back(std::move(xx));
  if (dim == 2) {
    Field xy(g), yy(g);
    for (std::size_t node = 0; node < g.size(); ++node) {
      xy[node] = (at(node, 1, 1) - at(node, 1, -1) - at(node, -1, 1) + at(node, -1, -1)) /
                 (4.0 * h2);
      yy[node] = (at(node, 0, 1) - 2.0 * f[node] + at(node, 0, -1)) / h2;
    }
    out.push_back(std::move(xy));
    out.push_back(std::move(yy));
  }
  return out;
}

double hessian_max_eig(const Field& f, HessianMethod method) {
  const auto hess = method == HessianMethod::spectral ? spectral_hessian(f)
                                                      : finite_difference_hessian(f);
  double best = -kInfinity;
  if (f.grid().dim() == 1) {
    for (std::size_t i = 0; i < f.size(); ++i) best = std::max(best, hess[0][i]);
    return best;
  }
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double a = hess[0][i], b = hess[1][i], c = hess[2][i];
    const double mid = 0.5 * (a + c);
    const double rad = std::hypot(0.5 * (a - c), b);
    best = std::max(best, mid + rad);
  }
  return best;
}

double lp_norm(const Field& f, double p) {
  if (!(p >= 1.0)) throw std::invalid_argument("lp_norm needs p >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : f.values()) m = std::max(m, std::abs(v));
    return m;
  }
  // Scale by the sup norm so large p does not overflow.
  double m = 0.0;
  for (double v : f.values()) m = std::max(m, std::abs(v));
  if (m == 0.0) return 0.0;
  double sum = 0.0;
  if (p == 2.0) {
    for (double v : f.values()) sum += (v / m) * (v / m);
  } else {
    for (double v : f.values()) sum += std::pow(std::abs(v) / m, p);
  }
  return m * std::pow(sum * f.grid().cell_volume(), 1.0 / p);
}

double integral(const Field& f) {
  double sum = 0.0;
  for (double v : f.values()) sum += v;
  return sum * f.grid().cell_volume();
}

double inner_product(const Field& f, const Field& g) {
  require_same_grid(f.grid(), g.grid());
  double sum = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) sum += f[i] * g[i];
  return sum * f.grid().cell_volume();
}

double mean(const Field& f) {
  double sum = 0.0;
  for (double v : f.values()) sum += v;
  return sum / static_cast<double>(f.size());
}

SpectralField dealias(const SpectralField& f_hat) {
  SpectralField out = f_hat;
  const detail::WaveTable table(f_hat.grid());
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!table.retained[i]) out[i] = Complex{};
  }
  return out;
}

double tail_fraction(const SpectralField& f_hat) {
  const detail::WaveTable table(f_hat.grid());
  double tail = 0.0, total = 0.0;
  for (std::size_t i = 0; i < f_hat.size(); ++i) {
    const double e = std::norm(f_hat[i]);
    total += e;
    if (!table.retained[i]) tail += e;
  }
  return total > 0.0 ? tail / total : 0.0;
}

double trig_interpolate(const SpectralField& f_hat, std::span<const double> x) {
  const auto& g = f_hat.grid();
  const int n = g.n_points();
  // Nyquist modes are split symmetrically so the interpolant stays real.
  auto weight = [n](int i) { return i == n / 2 ? 0.5 : 1.0; };
  if (g.dim() == 1) {
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const int k = g.wavenumber(i);
      const double w = weight(i);
      const Complex e = std::polar(1.0, k * x[0]);
      sum += w * (f_hat[i] * e).real();
      if (i == n / 2) sum += w * (f_hat[i] * std::conj(e)).real();
    }
    return sum;
  }
  std::vector<Complex> ex(n), ey(n), exn(n), eyn(n);
  for (int i = 0; i < n; ++i) {
    ex[i] = std::polar(1.0, g.wavenumber(i) * x[0]);
    ey[i] = std::polar(1.0, g.wavenumber(i) * x[1]);
  }
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const Complex c = f_hat[static_cast<std::size_t>(i) * n + j];
      const double w = weight(i) * weight(j);
      // Sum over the mirrored Nyquist images (k and -k at n/2).
      const int ni = i == n / 2 ? 2 : 1;
      const int nj = j == n / 2 ? 2 : 1;
      for (int a = 0; a < ni; ++a) {
        const Complex fx = a == 0 ? ex[i] : std::conj(ex[i]);
        for (int b = 0; b < nj; ++b) {
          const Complex fy = b == 0 ? ey[j] : std::conj(ey[j]);
          sum += w * (c * fx * fy).real();
        }
      }
    }
  }
  return sum;
}

Field subsample(const Field& f, const TorusGrid& coarse) {
  const auto& g = f.grid();
  if (coarse.dim() != g.dim() || g.n_points() % coarse.n_points() != 0) {
    throw std::invalid_argument("subsample target must divide the source grid");
  }
  const int stride = g.n_points() / coarse.n_points();
  Field out(coarse);
  int idx[2];
  for (std::size_t node = 0; node < coarse.size(); ++node) {
    for (int a = 0; a < g.dim(); ++a) idx[a] = coarse.axis_index(node, a) * stride;
    out[node] = f[g.flat_index(std::span<const int>(idx, g.dim()))];
  }
  return out;
}

}  // namespace fracvisc
