#pragma once

// Discrete periodic calculus on [0, 2pi)^dim: grids, nodal and Fourier
// representations, fractional Laplacians, spectral derivatives and
// quadrature norms.

#include <complex>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace fracvisc {

using Complex = std::complex<double>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Uniform grid on the flat torus [0, 2pi)^dim with n_points nodes per axis.
///
/// Nodes are stored row-major with axis 0 slowest. Storage index i along an
/// axis carries the integer frequency wavenumber(i) in [-n/2, n/2), which is
/// the usual FFT ordering.
class TorusGrid {
 public:
  TorusGrid(int dim, int n_points);

  int dim() const noexcept { return dim_; }
  int n_points() const noexcept { return n_; }
  double spacing() const noexcept { return spacing_; }
  std::size_t size() const noexcept;
  double cell_volume() const noexcept;

  int wavenumber(int i) const noexcept { return i < n_ / 2 ? i : i - n_; }
  double coordinate(int i) const noexcept { return i * spacing_; }

  /// Index along `axis` of the flat node `node`.
  int axis_index(std::size_t node, int axis) const noexcept;
  /// Flat node of a per-axis index tuple; indices are wrapped periodically.
  std::size_t flat_index(std::span<const int> index) const noexcept;
  /// Node coordinates of `node`, written into `x` (length dim).
  void node_coordinates(std::size_t node, std::span<double> x) const noexcept;

  bool operator==(const TorusGrid&) const = default;

 private:
  int dim_;
  int n_;
  double spacing_;
};

/// Smallest power of two >= 8 that is >= n.
int next_power_of_two(int n);

using PointFunction = std::function<double(std::span<const double>)>;

/// Real nodal samples of a periodic scalar function.
class Field {
 public:
  explicit Field(const TorusGrid& grid);
  Field(const TorusGrid& grid, std::vector<double> values);

  static Field sample(const TorusGrid& grid, const PointFunction& f);
  static Field constant(const TorusGrid& grid, double c);

  const TorusGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  double& operator[](std::size_t i) noexcept { return values_[i]; }

  bool all_finite() const noexcept;
  double max() const;
  double min() const;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double a) noexcept;

 private:
  TorusGrid grid_;
  std::vector<double> values_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double a, Field f);

/// Fourier coefficients c_k with f(x) = sum_k c_k exp(i k.x), stored in the
/// grid's FFT ordering.
class SpectralField {
 public:
  explicit SpectralField(const TorusGrid& grid);
  SpectralField(const TorusGrid& grid, std::vector<Complex> coefficients);

  const TorusGrid& grid() const noexcept { return grid_; }
  std::size_t size() const noexcept { return coefficients_.size(); }
  std::span<const Complex> coefficients() const noexcept { return coefficients_; }
  std::span<Complex> coefficients() noexcept { return coefficients_; }
  Complex operator[](std::size_t i) const noexcept { return coefficients_[i]; }
  Complex& operator[](std::size_t i) noexcept { return coefficients_[i]; }

  /// Largest |c(-k) - conj(c(k))| over all modes.
  double hermitian_defect() const;

 private:
  TorusGrid grid_;
  std::vector<Complex> coefficients_;
};

SpectralField forward(const Field& f);
/// Real part of the inverse transform.
Field inverse(const SpectralField& f_hat);

/// Which symbol represents (-Delta)^s on the grid.
enum class FractionalSymbol {
  /// |k|^{2s}, the Fourier-series definition.
  fourier,
  /// (sum_j (2 sin(k_j h / 2) / h)^2)^s: fractional power of the
  /// 3-point Laplacian. Its heat kernel is positive.
  grid_laplacian,
};

/// Symbol of (-Delta)^s at flat spectral index `index`.
double fractional_symbol(const TorusGrid& grid, std::size_t index, double s,
                         FractionalSymbol symbol = FractionalSymbol::fourier);

Field frac_laplacian(const Field& f, double s,
                     FractionalSymbol symbol = FractionalSymbol::fourier);

/// One field per axis: inverse transform of i k_j f_hat.
std::vector<Field> spectral_gradient(const Field& f);

/// Second derivatives in the order (xx) in 1D and (xx, xy, yy) in 2D.
std::vector<Field> spectral_hessian(const Field& f);
/// Same layout from centred differences (3-point diagonal, 4-point mixed).
std::vector<Field> finite_difference_hessian(const Field& f);
/// Centred-difference gradient, one field per axis.
std::vector<Field> finite_difference_gradient(const Field& f);

enum class HessianMethod { spectral, finite_difference };

/// Max over nodes of the largest Hessian eigenvalue (max f'' in 1D).
double hessian_max_eig(const Field& f,
                       HessianMethod method = HessianMethod::spectral);

/// (sum |f_i|^p h^dim)^(1/p); p = kInfinity gives max |f_i|.
double lp_norm(const Field& f, double p);
/// Quadrature of f over the torus.
double integral(const Field& f);
/// Quadrature of f g over the torus.
double inner_product(const Field& f, const Field& g);
double mean(const Field& f);

/// Zeroes every coefficient with some |k_j| > n/3.
SpectralField dealias(const SpectralField& f_hat);
/// Energy fraction held by modes with some |k_j| > n/3.
double tail_fraction(const SpectralField& f_hat);

/// Evaluates the trigonometric interpolant at an arbitrary point.
double trig_interpolate(const SpectralField& f_hat, std::span<const double> x);

/// Restricts a field to a coarser grid whose n_points divides the source's.
Field subsample(const Field& f, const TorusGrid& coarse);

}  // namespace fracvisc
