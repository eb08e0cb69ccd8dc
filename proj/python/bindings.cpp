#include <sstream>

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "fracvisc/app.hpp"
#include "fracvisc/config.hpp"
#include "fracvisc/rate_harness.hpp"

namespace py = pybind11;
using namespace fracvisc;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Field to_field(const Array& a) {
  if (a.ndim() < 1 || a.ndim() > 2) throw std::invalid_argument("expected a 1D or 2D array");
  const auto n = a.shape(0);
  if (a.ndim() == 2 && a.shape(1) != n) throw std::invalid_argument("2D arrays must be square");
  const TorusGrid g(static_cast<int>(a.ndim()), static_cast<int>(n));
  return Field(g, std::vector<double>(a.data(), a.data() + a.size()));
}

Array to_array(const Field& f) {
  std::vector<py::ssize_t> shape(f.grid().dim(), f.grid().n_points());
  Array out(shape);
  std::copy(f.values().begin(), f.values().end(), out.mutable_data());
  return out;
}

py::dict trajectory_dict(const Trajectory& tr) {
  py::list snaps;
  for (const auto& f : tr.snapshots) snaps.append(to_array(f));
  py::dict d;
  d["times"] = tr.times;
  d["snapshots"] = snaps;
  d["semiconcavity"] = tr.semiconcavity;
  d["gradient_sup"] = tr.gradient_sup;
  d["scheme"] = to_string(tr.scheme);
  return d;
}

py::dict fit_dict(const RateFit& f) {
  py::dict d;
  d["model"] = to_string(f.model);
  d["exponent"] = f.exponent;
  d["prefactor"] = f.prefactor;
  d["residual"] = f.residual;
  d["free_slope"] = f.free_slope;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Vanishing-viscosity rates for fractional Hamilton-Jacobi equations";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<ExperimentConfig>(m, "Config")
      .def(py::init<>())
      .def_static("parse", &ExperimentConfig::parse, py::arg("text"), py::arg("source") = "config")
      .def_static("load", &ExperimentConfig::load)
      .def("to_text", &ExperimentConfig::to_text)
      .def("echo_json", [](const ExperimentConfig& c) { return c.echo().dump(); })
      .def_readwrite("s_list", &ExperimentConfig::s_list)
      .def_readwrite("epsilon_list", &ExperimentConfig::epsilon_list)
      .def_readwrite("p_list", &ExperimentConfig::p_list)
      .def_readwrite("T", &ExperimentConfig::T)
      .def_readwrite("n_points", &ExperimentConfig::n_points)
      .def_readwrite("snapshot_count", &ExperimentConfig::snapshot_count);

  m.def("frac_laplacian", [](const Array& a, double s) { return to_array(frac_laplacian(to_field(a), s)); },
        py::arg("values"), py::arg("s"), "(-Delta)^s of periodic samples on [0, 2pi)^d.");

  m.def(
      "solve",
      [](const ExperimentConfig& c, double s, double epsilon, int n) {
        py::gil_scoped_release release;
        const ProblemSpec p = c.problem(s, epsilon, n);
        const auto t = c.snapshot_times();
        Trajectory tr = viscous_solve(p, c.solver_options(), t);
        py::gil_scoped_acquire acquire;
        return trajectory_dict(tr);
      },
      py::arg("config"), py::arg("s"), py::arg("epsilon"), py::arg("n") = 0);

  m.def(
      "hopf_lax",
      [](const ExperimentConfig& c, double t, int n) {
        const ProblemSpec p = c.problem(c.s_list.front(), 0.0, n);
        return to_array(hopf_lax_oracle(p, t, p.grid));
      },
      py::arg("config"), py::arg("t"), py::arg("n"));

  m.def(
      "fit_rate",
      [](const std::vector<double>& eps, const std::vector<double>& err, const std::string& model) {
        if (eps.size() != err.size()) throw std::invalid_argument("eps and err differ in length");
        std::vector<std::pair<double, double>> pts;
        for (std::size_t i = 0; i < eps.size(); ++i) pts.emplace_back(eps[i], err[i]);
        return fit_dict(fit_rate(pts, parse_rate_model(model)));
      },
      py::arg("eps"), py::arg("err"), py::arg("model") = "power");

  m.def(
      "run",
      [](const std::string& command, const std::filesystem::path& config,
         std::optional<std::filesystem::path> output) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = run_command({command, config, output}, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("command"), py::arg("config"), py::arg("output") = py::none(),
      "Runs a subcommand; returns (exit code, stdout text, stderr text).");

  m.def(
      "selftest",
      [](std::uint64_t seed) {
        py::list out;
        for (const auto& c : run_selftest(seed)) out.append(py::make_tuple(c.name, c.pass, c.detail));
        return out;
      },
      py::arg("seed") = 1);

  m.attr("INFINITY") = kInfinity;
}
