#include "fracvisc/hamiltonian.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace fracvisc {

namespace {

void require_finite(const Vec& v, const char* what) {
  if (v.size() < 1 || v.size() > 2) throw std::invalid_argument("vector dimension must be 1 or 2");
  if (!v.allFinite()) throw std::invalid_argument(std::string("non-finite ") + what);
}

std::vector<double> parse_numbers(std::string_view text) {
  std::vector<double> out;
  std::string item;
  std::stringstream ss{std::string(text)};
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad number '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

Hamiltonian::Hamiltonian(HamiltonianKind kind, std::vector<double> parameters, double theta,
                         double Theta, double valid_radius)
    : kind_(kind),
      parameters_(std::move(parameters)),
      theta_(theta),
      Theta_(Theta),
      valid_radius_(valid_radius) {}

Hamiltonian Hamiltonian::zero() { return {HamiltonianKind::zero, {}, 0.0, 0.0, std::numeric_limits<double>::infinity()}; }

Hamiltonian Hamiltonian::quadratic() {
  return {HamiltonianKind::quadratic, {}, 1.0, 1.0, std::numeric_limits<double>::infinity()};
}

Hamiltonian Hamiltonian::anisotropic_quadratic(std::vector<double> masses) {
  if (masses.empty() || masses.size() > 2) {
    throw std::invalid_argument("anisotropic_quadratic takes one or two masses");
  }
  for (double m : masses) {
    if (!(m > 0.0) || !std::isfinite(m)) throw std::invalid_argument("masses must be positive");
  }
  const auto [lo, hi] = std::minmax_element(masses.begin(), masses.end());
  const double theta = *lo, Theta = *hi;
  return {HamiltonianKind::anisotropic_quadratic, std::move(masses), theta, Theta,
          std::numeric_limits<double>::infinity()};
}

Hamiltonian Hamiltonian::log_cosh_regularized(double regularization, double valid_radius) {
  if (!(regularization >= 0.0) || !(valid_radius > 0.0)) {
    throw std::invalid_argument("log_cosh_regularized needs c >= 0 and radius > 0");
  }
  return {HamiltonianKind::log_cosh_regularized,
          {regularization, valid_radius},
          1.0 + regularization,
          std::cosh(valid_radius) + regularization,
          valid_radius};
}

Hamiltonian Hamiltonian::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view kind = text.substr(0, colon);
  const std::vector<double> params =
      colon == std::string_view::npos ? std::vector<double>{} : parse_numbers(text.substr(colon + 1));
  if (kind == "zero" && params.empty()) return zero();
  if (kind == "quadratic" && params.empty()) return quadratic();
  if (kind == "anisotropic_quadratic") return anisotropic_quadratic(params);
  if (kind == "log_cosh_regularized") {
    if (params.empty()) return log_cosh_regularized(0.1);
    if (params.size() == 1) return log_cosh_regularized(params[0]);
    if (params.size() == 2) return log_cosh_regularized(params[0], params[1]);
  }
  throw std::invalid_argument("unknown hamiltonian '" + std::string(text) + "'");
}

std::string Hamiltonian::describe() const {
  std::ostringstream out;
  out.precision(17);
  switch (kind_) {
    case HamiltonianKind::zero: return "zero";
    case HamiltonianKind::quadratic: return "quadratic";
    case HamiltonianKind::anisotropic_quadratic:
      out << "anisotropic_quadratic:";
      for (std::size_t i = 0; i < parameters_.size(); ++i) out << (i ? "," : "") << parameters_[i];
      return out.str();
    case HamiltonianKind::log_cosh_regularized:
      out << "log_cosh_regularized:" << parameters_[0] << "," << parameters_[1];
      return out.str();
  }
  return {};
}

double Hamiltonian::mass(int axis) const {
  return parameters_.size() == 1 ? parameters_[0] : parameters_[axis];
}

HamiltonianEval Hamiltonian::eval(const Vec& p) const {
  require_finite(p, "momentum");
  const auto n = p.size();
  HamiltonianEval r{0.0, Vec::Zero(n), Mat::Zero(n, n)};
  switch (kind_) {
    case HamiltonianKind::zero:
      break;
    case HamiltonianKind::quadratic:
      r.value = 0.5 * p.squaredNorm();
      r.gradient = p;
      r.hessian = Mat::Identity(n, n);
      break;
    case HamiltonianKind::anisotropic_quadratic:
      for (Eigen::Index j = 0; j < n; ++j) {
        const double m = mass(static_cast<int>(j));
        r.value += 0.5 * m * p[j] * p[j];
        r.gradient[j] = m * p[j];
        r.hessian(j, j) = m;
      }
      break;
    case HamiltonianKind::log_cosh_regularized: {
      const double c = parameters_[0];
      for (Eigen::Index j = 0; j < n; ++j) {
        r.value += std::cosh(p[j]) - 1.0 + 0.5 * c * p[j] * p[j];
        r.gradient[j] = std::sinh(p[j]) + c * p[j];
        r.hessian(j, j) = std::cosh(p[j]) + c;
      }
      break;
    }
  }
  return r;
}

double Hamiltonian::value(const Vec& p) const { return eval(p).value; }
Vec Hamiltonian::gradient(const Vec& p) const { return eval(p).gradient; }
Mat Hamiltonian::hessian(const Vec& p) const { return eval(p).hessian; }

// ------------------------------------------------------------ Lagrangian

Lagrangian::Lagrangian(Hamiltonian hamiltonian, double tolerance)
    : hamiltonian_(std::move(hamiltonian)), tolerance_(tolerance) {
  if (!hamiltonian_.uniformly_convex()) {
    throw std::invalid_argument("Legendre transform needs a uniformly convex Hamiltonian");
  }
}

LegendreResult Lagrangian::solve(const Vec& q) const {
  require_finite(q, "argument");
  const auto& H = hamiltonian_;
  const double scale = std::max(1.0, q.lpNorm<Eigen::Infinity>());
  // Quadratic kinds converge in one step from any start.
  Vec p = Vec::Zero(q.size());
  auto objective = [&](const Vec& x, const HamiltonianEval& e) { return x.dot(q) - e.value; };
  HamiltonianEval e = H.eval(p);
  double phi = objective(p, e);
  for (int it = 0; it < 100; ++it) {
    const Vec residual = q - e.gradient;
    if (residual.lpNorm<Eigen::Infinity>() <= tolerance_ * scale) {
      return {phi, p, it};
    }
    const Vec step = e.hessian.ldlt().solve(residual);
    double t = 1.0;
    for (int back = 0; back < 60; ++back) {
      const Vec trial = p + t * step;
      const HamiltonianEval et = H.eval(trial);
      const double phit = objective(trial, et);
      // Accept on ascent, or when the increment is at rounding level.
      if (phit >= phi - 1e-15 * std::max(1.0, std::abs(phi))) {
        p = trial;
        e = et;
        phi = phit;
        break;
      }
      t *= 0.5;
    }
  }
  throw std::runtime_error("Legendre transform: Newton did not converge in 100 iterations");
}

double legendre_transform(const Lagrangian& lagrangian, const Vec& q) { return lagrangian(q); }

Vec vec(std::initializer_list<double> values) {
  Vec v(static_cast<Eigen::Index>(values.size()));
  Eigen::Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

}  // namespace fracvisc
