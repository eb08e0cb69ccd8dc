#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fracvisc/hj_solver.hpp"

namespace fracvisc {

namespace {

std::vector<double> parse_list(std::string_view text) {
  std::vector<double> out;
  std::stringstream ss{std::string(text)};
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    out.push_back(std::stod(item, &used));
    if (used != item.size()) throw std::invalid_argument("bad number '" + item + "'");
  }
  return out;
}

}  // namespace

Field Forcing::sample(const TorusGrid& grid, double t) const {
  if (is_zero()) return Field(grid);
  return Field::sample(grid, [&](std::span<const double> x) { return value(x, t); });
}

Forcing Forcing::zero() { return {}; }

Forcing Forcing::cosine(double amplitude) {
  Forcing f;
  f.value = [amplitude](std::span<const double> x, double) {
    double sum = 0.0;
    for (double xi : x) sum += std::cos(xi);
    return amplitude * sum;
  };
  f.semiconcavity = [amplitude](double) { return std::abs(amplitude); };
  std::ostringstream name;
  name.precision(17);
  name << "cos:" << amplitude;
  f.name = name.str();
  return f;
}

Forcing Forcing::constant(double c) {
  Forcing f;
  f.value = [c](std::span<const double>, double) { return c; };
  f.semiconcavity = [](double) { return 0.0; };
  std::ostringstream name;
  name.precision(17);
  name << "const:" << c;
  f.name = name.str();
  return f;
}

Forcing forcing_preset(std::string_view name) {
  if (name == "zero") return Forcing::zero();
  const auto colon = name.find(':');
  if (colon != std::string_view::npos) {
    const auto kind = name.substr(0, colon);
    const auto params = parse_list(name.substr(colon + 1));
    if (params.size() == 1 && kind == "cos") return Forcing::cosine(params[0]);
    if (params.size() == 1 && kind == "const") return Forcing::constant(params[0]);
  }
  throw std::invalid_argument("unknown forcing '" + std::string(name) + "'");
}

PointFunction initial_datum(std::string_view name, int dim) {
  if (name == "cos" && dim == 1) return [](std::span<const double> x) { return std::cos(x[0]); };
  if (name == "cos2d" && dim == 2) {
    return [](std::span<const double> x) { return std::cos(x[0]) + std::cos(x[1]); };
  }
  if (name == "bump") {
    return [](std::span<const double> x) {
      double sum = 0.0;
      for (double xi : x) sum += std::exp(std::cos(xi) - 1.0);
      return sum;
    };
  }
  if (name == "lipschitz" && dim == 1) {
    return [](std::span<const double> x) { return std::abs(std::sin(0.5 * x[0])); };
  }
  if (name.starts_with("coeffs:") && dim == 1) {
    const auto c = parse_list(name.substr(7));
    if (c.empty() || c.size() % 2 != 0) {
      throw std::invalid_argument("coeffs needs pairs a_k,b_k");
    }
    return [c](std::span<const double> x) {
      double sum = 0.0;
      for (std::size_t k = 0; 2 * k < c.size(); ++k) {
        const double kx = static_cast<double>(k + 1) * x[0];
        sum += c[2 * k] * std::cos(kx) + c[2 * k + 1] * std::sin(kx);
      }
      return sum;
    };
  }
  throw std::invalid_argument("unknown initial datum '" + std::string(name) + "' for dim " +
                              std::to_string(dim));
}

void ProblemSpec::validate(bool for_reference) const {
  if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("s must lie in (0, 1]");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw std::invalid_argument("epsilon must be finite and >= 0");
  }
  if (!for_reference && epsilon == 0.0) {
    throw std::invalid_argument("epsilon = 0 is only allowed for reference solvers");
  }
  if (!(T > 0.0)) throw std::invalid_argument("T must be positive");
  if (!(u0.grid() == grid)) throw std::invalid_argument("u0 lives on a different grid");
  if (!u0.all_finite()) throw std::invalid_argument("u0 is not finite");
  if (u0_semiconcavity <
      hessian_max_eig(u0, HessianMethod::finite_difference) - 1e-8) {
    throw std::invalid_argument("u0_semiconcavity below the Hessian of u0");
  }
}

ProblemSpec ProblemSpec::on_grid(const TorusGrid& g) const {
  ProblemSpec out = *this;
  out.grid = g;
  if (u0_function) {
    out.u0 = Field::sample(g, u0_function);
  } else {
    const auto coeffs = forward(u0);
    out.u0 = Field::sample(g, [&](std::span<const double> x) { return trig_interpolate(coeffs, x); });
  }
  // Kinked data sharpen under refinement.
  out.u0_semiconcavity = std::max({u0_semiconcavity,
                                   hessian_max_eig(out.u0, HessianMethod::finite_difference),
                                   hessian_max_eig(out.u0, HessianMethod::spectral)});
  return out;
}

ProblemSpec ProblemSpec::with_epsilon(double eps) const {
  ProblemSpec out = *this;
  out.epsilon = eps;
  return out;
}

ProblemSpec ProblemSpec::with_order(double order) const {
  ProblemSpec out = *this;
  out.s = order;
  return out;
}

ProblemSpec make_problem(const TorusGrid& grid, double s, double epsilon, Hamiltonian H,
                         PointFunction u0, Forcing forcing, double T) {
  Field samples = Field::sample(grid, u0);
  // Both Hessians are recorded so either monitor stays below the constant.
  const double k0 = std::max(hessian_max_eig(samples, HessianMethod::finite_difference),
                             hessian_max_eig(samples, HessianMethod::spectral));
  ProblemSpec p{.grid = grid,
                .s = s,
                .epsilon = epsilon,
                .hamiltonian = std::move(H),
                .u0 = std::move(samples),
                .u0_function = std::move(u0),
                .forcing = std::move(forcing),
                .T = T,
                .u0_semiconcavity = std::max(0.0, k0)};
  return p;
}

}  // namespace fracvisc
