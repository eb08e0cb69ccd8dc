#pragma once

#include <Eigen/Core>

#include <string>
#include <string_view>
#include <vector>

namespace fracvisc {

/// Vectors and matrices of dimension <= 2 without heap allocation.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 2, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 2, 2>;

enum class HamiltonianKind { zero, quadratic, anisotropic_quadratic, log_cosh_regularized };

struct HamiltonianEval {
  double value;
  Vec gradient;
  Mat hessian;
};

/// Convex Hamiltonian H(p) from a small built-in family.
///
/// theta and Theta bound the Hessian eigenvalues on the ball |p| <= valid_radius:
///   quadratic              H = |p|^2 / 2                     theta = Theta = 1
///   anisotropic_quadratic  H = sum_j m_j p_j^2 / 2           theta = min m, Theta = max m
///   log_cosh_regularized   H = sum_j (cosh p_j - 1) + c|p|^2/2
///                                         theta = 1 + c, Theta = cosh(R) + c
///   zero                   H = 0 (not uniformly convex; linear test problems only)
class Hamiltonian {
 public:
  static Hamiltonian zero();
  static Hamiltonian quadratic();
  static Hamiltonian anisotropic_quadratic(std::vector<double> masses);
  static Hamiltonian log_cosh_regularized(double regularization, double valid_radius = 4.0);

  /// Parses "kind" or "kind:a,b,..." as written in experiment configs.
  static Hamiltonian parse(std::string_view text);
  /// Inverse of parse.
  std::string describe() const;

  HamiltonianKind kind() const noexcept { return kind_; }
  const std::vector<double>& parameters() const noexcept { return parameters_; }
  double theta() const noexcept { return theta_; }
  double Theta() const noexcept { return Theta_; }
  double valid_radius() const noexcept { return valid_radius_; }
  bool uniformly_convex() const noexcept { return theta_ > 0.0; }

  /// Throws std::invalid_argument on non-finite p.
  HamiltonianEval eval(const Vec& p) const;
  double value(const Vec& p) const;
  Vec gradient(const Vec& p) const;
  Mat hessian(const Vec& p) const;

 private:
  Hamiltonian(HamiltonianKind kind, std::vector<double> parameters, double theta,
              double Theta, double valid_radius);

  double mass(int axis) const;

  HamiltonianKind kind_;
  std::vector<double> parameters_;
  double theta_;
  double Theta_;
  double valid_radius_;
};

struct LegendreResult {
  double value;
  Vec maximizer;
  int iterations;
};

/// Convex conjugate L(q) = sup_p (p.q - H(p)) of a uniformly convex Hamiltonian,
/// evaluated by damped Newton on the strictly concave objective.
class Lagrangian {
 public:
  explicit Lagrangian(Hamiltonian hamiltonian, double tolerance = 1e-10);

  const Hamiltonian& hamiltonian() const noexcept { return hamiltonian_; }
  double tolerance() const noexcept { return tolerance_; }

  /// Throws std::runtime_error when Newton fails within 100 iterations.
  LegendreResult solve(const Vec& q) const;
  double operator()(const Vec& q) const { return solve(q).value; }

 private:
  Hamiltonian hamiltonian_;
  double tolerance_;
};

double legendre_transform(const Lagrangian& lagrangian, const Vec& q);

/// Builds a Vec from a braced list, e.g. vec({1.0, 2.0}).
Vec vec(std::initializer_list<double> values);

}  // namespace fracvisc
