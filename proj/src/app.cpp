#include "fracvisc/app.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "fracvisc/config.hpp"
#include "fracvisc/dual_transport.hpp"
#include "fracvisc/rate_harness.hpp"

namespace fracvisc {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

fs::path prepare_output(const ExperimentConfig& cfg, const AppRequest& req) {
  const fs::path dir = req.output ? *req.output : fs::path(cfg.output_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());
  return dir;
}

json p_json(double p) { return std::isinf(p) ? json("inf") : json(p); }

json vector_json(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? json(x) : json(nullptr));
  return a;
}

// ---------------------------------------------------------------- solve

int cmd_solve(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& out) {
  const double s = cfg.s_list.front();
  const double eps = cfg.epsilon_list.front();
  const ProblemSpec problem = cfg.problem(s, eps);
  const auto times = cfg.snapshot_times();
  const Trajectory traj = viscous_solve(problem, cfg.solver_options(), times);
  const auto files = export_trajectory(traj, dir, "u");
  const SemiconcavityProfile prof = semiconcavity_profile(traj, problem);

  bool ok = true;
  double worst = -kInfinity;
  for (std::size_t i = 0; i < prof.k.size(); ++i) {
    const double excess = prof.k[i] - prof.riccati_bound[i];
    worst = std::max(worst, excess);
    if (excess > 1e-6 + 1e-2 * std::abs(prof.riccati_bound[i])) ok = false;
  }
  json j;
  j["config"] = cfg.echo();
  j["s"] = s;
  j["epsilon"] = eps;
  j["n_points"] = problem.grid.n_points();
  j["scheme"] = to_string(traj.scheme);
  j["times"] = vector_json(traj.times);
  j["semiconcavity"] = vector_json(prof.k);
  j["riccati_bound"] = vector_json(prof.riccati_bound);
  j["gradient_sup"] = vector_json(traj.gradient_sup);
  j["semiconcavity_excess"] = worst;
  j["pass"] = ok;
  write_json(dir / "solve.json", j);
  out << "solve: s=" << s << " eps=" << eps << " n=" << problem.grid.n_points() << " scheme="
      << to_string(traj.scheme) << ", " << files.size() << " snapshots written to " << dir.string()
      << "\n"
      << "semiconcavity vs Riccati bound: worst excess " << worst << (ok ? " (ok)" : " (FAILED)")
      << "\n";
  return ok ? kExitOk : kExitFailedChecks;
}

// ---------------------------------------------------------------- sweep

json cell_json(const SweepCell& c) {
  json j;
  j["s"] = c.s;
  j["epsilon"] = c.epsilon;
  j["n_points"] = c.n_points;
  j["ok"] = c.ok;
  if (!c.ok) j["message"] = c.message;
  j["one_sided_error"] = c.one_sided_error;
  j["half_laplacian_bound"] = c.half_laplacian_bound;
  j["max_semiconcavity"] =
      c.semiconcavity.empty() ? 0.0 : *std::max_element(c.semiconcavity.begin(), c.semiconcavity.end());
  return j;
}

json comparisons_json(const SweepResult& result) {
  json a = json::array();
  for (double s : result.plan.orders) {
    for (double p : result.plan.norms) {
      const auto table = result.table(s, p);
      if (table.size() < 5) continue;
      try {
        const RateFit pw = fit_rate(table, RateModel::power);
        const RateFit pl = fit_rate(table, RateModel::power_log);
        const ModelComparison cmp = compare_models(pw, pl);
        a.push_back({{"s", s},
                     {"p", p_json(p)},
                     {"power_residual", pw.residual},
                     {"power_log_residual", pl.residual},
                     {"distinguishable", cmp.distinguishable},
                     {"preferred", cmp.distinguishable ? json(to_string(cmp.preferred)) : json(nullptr)}});
      } catch (const std::invalid_argument&) {
      }
    }
  }
  return a;
}

int cmd_sweep(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& out, std::ostream& err) {
  SweepPlan plan = cfg.sweep_plan();
  try {
    plan.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("epsilon_list", 0, std::string("sweep: ") + e.what());
  }
  const int threads = worker_count();
  out << "sweep: " << plan.orders.size() * plan.epsilons.size() << " cells on " << threads
      << " thread(s)\n";
  const SweepResult result = run_sweep(plan, threads);
  bool ok = true;
  json cells = json::array();
  for (const auto& c : result.cells) {
    cells.push_back(cell_json(c));
    if (!c.ok) {
      ok = false;
      err << "cell s=" << c.s << " eps=" << c.epsilon << " failed: " << c.message << "\n";
    }
  }
  const auto verdicts = fit_all(result);
  if (verdicts.empty()) {
    err << "sweep: no (s, p) pair has five successful cells\n";
    return kExitFailedChecks;
  }
  for (const auto& v : verdicts) {
    out << "  s=" << v.s << " p=" << format_p(v.p) << " " << to_string(v.fit.model)
        << " slope=" << acceptance_slope(v.fit);
    if (v.target) out << " target=" << v.target->exponent;
    out << (v.pass ? " PASS" : " FAIL") << "\n";
    ok = ok && v.pass;
  }
  emit_report(rate_rows(result), verdicts, cfg.echo(), dir,
              {{"cells", cells}, {"model_comparison", comparisons_json(result)}});
  out << "wrote rates.csv, report.json, plots.gp to " << dir.string() << "\n";
  return ok ? kExitOk : kExitFailedChecks;
}

// ---------------------------------------------------------------- dual-check

int cmd_dual_check(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& out) {
  const Hamiltonian H = cfg.make_hamiltonian();
  const auto times = cfg.snapshot_times();
  const SolverOptions solver = cfg.solver_options();
  bool ok = true;
  json report;
  report["config"] = cfg.echo();
  report["checks"] = json::array();

  for (double s : cfg.s_list) {
    for (const auto& [eps, eta] : cfg.pairs) {
      const int n = cfg.n_points ? cfg.n_points : resolution_rule(std::min(eps, eta), s);
      const ProblemSpec pe = cfg.problem(s, eps, n);
      const ProblemSpec ph = cfg.problem(s, eta, n);
      const Trajectory te = viscous_solve(pe, solver, times);
      const Trajectory th = viscous_solve(ph, solver, times);
      const DriftField drift = build_drift(te, th, H, 4, DriftLayout::face);

      // Semiconcavity bound shared by both solutions.
      const auto bound = semiconcavity_profile(te, pe).riccati_bound;
      const DivergenceCheck div = divergence_lower_bound(drift, bound, H.Theta(), 1e-6);

      const Field w = te.at(cfg.T) - th.at(cfg.T);
      json entry{{"s", s}, {"epsilon", eps}, {"eta", eta}, {"n_points", n},
                 {"divergence_bound_worst", div.worst}, {"divergence_bound_pass", div.pass}};
      bool pair_ok = div.pass;

      const Field alpha = dual_datum(w, 2.0, true);
      json runs = json::array();
      for (double q : cfg.q_list) {
        const double c_univ = riccati_gronwall_constant(pe, cfg.T, q);
        const double alpha_q = lp_norm(alpha, q);
        for (double eta_dual : cfg.eta_list) {
          const DualSolution sol = dual_solve(drift, eta_dual, alpha, cfg.T);
          const GronwallReport g = gronwall_check(sol, drift, q);
          double ratio = 0.0, mass_drift = 0.0, min_rho = kInfinity;
          for (std::size_t i = 0; i < sol.times.size(); ++i) {
            ratio = std::max(ratio, lp_norm(sol.snapshots[i], q) / alpha_q);
            mass_drift = std::max(mass_drift, std::abs(sol.mean[i] - mean(alpha)));
            min_rho = std::min(min_rho, sol.min[i]);
          }
          const bool universal = ratio <= c_univ * 1.01;
          const bool positive = min_rho >= -1e-6 * alpha.max();
          const bool mass = mass_drift <= 1e-12 * std::max(1.0, std::abs(mean(alpha)));
          const bool run_ok = g.pass && universal && positive && mass;
          pair_ok = pair_ok && run_ok;
          runs.push_back({{"q", q},
                          {"eta_dual", eta_dual},
                          {"gronwall_constant", g.constant},
                          {"gronwall_worst_margin", g.worst_margin},
                          {"gronwall_pass", g.pass},
                          {"norm_ratio", ratio},
                          {"universal_constant", c_univ},
                          {"universal_pass", universal},
                          {"min_rho", min_rho},
                          {"mass_drift", mass_drift},
                          {"pass", run_ok}});
          out << "  s=" << s << " pair=(" << eps << "," << eta << ") q=" << q << " eta_dual=" << eta_dual
              << " C=" << g.constant << " ratio=" << ratio << " C_univ=" << c_univ
              << (run_ok ? " PASS" : " FAIL") << "\n";
        }
      }
      entry["runs"] = runs;

      // Duality identity with the pair's own dual viscosity.
      const DualSolution own =
          dual_solve(drift, eta, alpha, cfg.T, DualOptions{.flux = FluxScheme::limited});
      const DualityResidual dr = duality_residual(te, th, own, cfg.T);
      entry["duality"] = {{"lhs", dr.lhs}, {"rhs", dr.rhs}, {"relative_residual", dr.residual}};
      export_dual(own, s, dir);
      export_trajectory(te, dir, "u");
      export_trajectory(th, dir, "u");
      out << "  duality: lhs=" << dr.lhs << " rhs=" << dr.rhs << " relative residual=" << dr.residual
          << "\n";
      entry["pass"] = pair_ok;
      ok = ok && pair_ok;
      report["checks"].push_back(entry);
    }
  }
  report["pass"] = ok;
  write_json(dir / "dual_check.json", report);
  return ok ? kExitOk : kExitFailedChecks;
}

// ---------------------------------------------------------------- one-sided

int cmd_one_sided(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& out) {
  SweepPlan plan = cfg.sweep_plan();
  plan.orders = {0.5};
  plan.norms = {kInfinity};
  try {
    plan.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("epsilon_list", 0, std::string("one-sided: ") + e.what());
  }
  const SweepResult result = run_sweep(plan, worker_count());
  const OneSidedReport rep = one_sided_check(result, 0.5);
  json j;
  j["config"] = cfg.echo();
  j["epsilons"] = vector_json(rep.epsilons);
  j["half_laplacian_bounds"] = vector_json(rep.bounds);
  j["one_sided_errors"] = vector_json(rep.errors);
  j["spread"] = rep.spread;
  j["hypothesis_uniform"] = rep.hypothesis_uniform;
  if (rep.fit) {
    j["fit"] = {{"exponent", rep.fit->exponent}, {"prefactor", rep.fit->prefactor},
                {"residual", rep.fit->residual}};
  } else {
    j["fit"] = nullptr;
  }
  j["pass"] = rep.pass;
  write_json(dir / "one_sided.json", j);
  out << "one-sided: bound spread " << rep.spread
      << (rep.hypothesis_uniform ? " (uniform)" : " (not uniform; check is vacuous)");
  if (rep.fit) out << ", slope " << rep.fit->exponent;
  out << (rep.pass ? " PASS" : " FAIL") << "\n";
  return rep.pass ? kExitOk : kExitFailedChecks;
}

// ---------------------------------------------------------------- report

int cmd_report(const ExperimentConfig& cfg, const fs::path& dir, std::ostream& out) {
  const auto rows = read_rates_csv(dir / "rates.csv");
  const auto verdicts = fit_rows(rows);
  if (verdicts.empty()) throw std::runtime_error("rates.csv has no (s, p) table with five rows");
  json echo = cfg.echo();
  json extra = json::object();
  if (std::ifstream in(dir / "report.json"); in) {
    const json old = json::parse(in);
    if (old.contains("config")) echo = old["config"];
    for (const auto& [k, v] : old.items()) {
      if (k != "config" && k != "fits") extra[k] = v;
    }
  }
  emit_report(rows, verdicts, echo, dir, extra);
  bool ok = true;
  for (const auto& v : verdicts) {
    out << "  s=" << v.s << " p=" << format_p(v.p) << " slope=" << acceptance_slope(v.fit)
        << (v.pass ? " PASS" : " FAIL") << "\n";
    ok = ok && v.pass;
  }
  return ok ? kExitOk : kExitFailedChecks;
}

// ---------------------------------------------------------------- selftest

int cmd_selftest(const ExperimentConfig& cfg, std::ostream& out) {
  const auto cases = run_selftest(cfg.seed);
  int failed = 0;
  for (const auto& c : cases) {
    out << (c.pass ? "PASS " : "FAIL ") << c.name;
    if (!c.detail.empty()) out << "  (" << c.detail << ")";
    out << "\n";
    failed += c.pass ? 0 : 1;
  }
  out << cases.size() - failed << "/" << cases.size() << " passed\n";
  return failed == 0 ? kExitOk : kExitFailedChecks;
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

SelftestCase check(std::string name, double value, double tol) {
  return {std::move(name), value <= tol, "err " + num(value) + ", tol " + num(tol)};
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names{"solve",     "sweep",  "dual-check",
                                              "one-sided", "report", "selftest"};
  return names;
}

std::vector<SelftestCase> run_selftest(std::uint64_t seed) {
  std::vector<SelftestCase> cases;
  auto guard = [&](const std::string& name, auto&& body) {
    try {
      cases.push_back(body());
    } catch (const std::exception& e) {
      cases.push_back({name, false, e.what()});
    }
  };
  const TorusGrid g(1, 64);

  guard("fractional Laplacian of a constant", [&] {
    return check("fractional Laplacian of a constant",
                 lp_norm(frac_laplacian(Field::constant(g, 3.0), 0.5), kInfinity), 1e-12);
  });
  guard("half Laplacian of cos 3x", [&] {
    const Field f = Field::sample(g, [](std::span<const double> x) { return std::cos(3 * x[0]); });
    return check("half Laplacian of cos 3x", lp_norm(frac_laplacian(f, 0.5) - 3.0 * f, kInfinity), 1e-12);
  });
  guard("spectral gradient of sin 2x", [&] {
    const Field f = Field::sample(g, [](std::span<const double> x) { return std::sin(2 * x[0]); });
    const Field d = Field::sample(g, [](std::span<const double> x) { return 2 * std::cos(2 * x[0]); });
    return check("spectral gradient of sin 2x", lp_norm(spectral_gradient(f)[0] - d, kInfinity), 1e-12);
  });
  guard("Hessian bound of cos", [&] {
    const Field f = Field::sample(g, [](std::span<const double> x) { return std::cos(x[0]); });
    return check("Hessian bound of cos", std::abs(hessian_max_eig(f) - 1.0), 1e-12);
  });
  guard("L2 norm of 1", [&] {
    return check("L2 norm of 1", std::abs(lp_norm(Field::constant(g, 1.0), 2.0) - std::sqrt(kTwoPi)),
                 1e-12);
  });
  guard("dealiasing removes mode n/2-1", [&] {
    const Field f = Field::sample(g, [](std::span<const double> x) { return std::cos(31 * x[0]); });
    return check("dealiasing removes mode n/2-1", lp_norm(inverse(dealias(forward(f))), kInfinity),
                 1e-13);
  });
  guard("H(3,4) = 12.5", [&] {
    return check("H(3,4) = 12.5",
                 std::abs(Hamiltonian::quadratic().value(vec({3.0, 4.0})) - 12.5), 1e-14);
  });
  guard("Legendre transform on random samples", [&] {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    const Lagrangian L(Hamiltonian::log_cosh_regularized(0.5));
    double worst = 0.0;
    for (int i = 0; i < 200; ++i) {
      // L(D_pH(p)) = p.D_pH(p) - H(p).
      const Vec p = vec({u(rng)});
      const Vec q = L.hamiltonian().gradient(p);
      worst = std::max(worst, std::abs(L(q) - (p.dot(q) - L.hamiltonian().value(p))));
    }
    return check("Legendre transform on random samples", worst, 1e-8);
  });
  guard("zero solution stays zero", [&] {
    const ProblemSpec pr =
        make_problem(g, 0.5, 0.1, Hamiltonian::quadratic(),
                     [](std::span<const double>) { return 0.0; }, Forcing::zero(), 1.0);
    const std::vector<double> t{1.0};
    return check("zero solution stays zero",
                 lp_norm(viscous_solve(pr, {}, t).at(1.0), kInfinity), 1e-14);
  });
  guard("linear heat decay", [&] {
    const ProblemSpec pr =
        make_problem(g, 1.0, 0.1, Hamiltonian::zero(),
                     [](std::span<const double> x) { return std::cos(x[0]); }, Forcing::zero(), 1.0);
    const std::vector<double> t{1.0};
    const Field u = viscous_solve(pr, {}, t).at(1.0);
    const Field e = Field::sample(g, [](std::span<const double> x) { return std::exp(-0.1) * std::cos(x[0]); });
    return check("linear heat decay", lp_norm(u - e, kInfinity), 1e-8);
  });
  guard("Hopf-Lax keeps constants", [&] {
    const ProblemSpec pr =
        make_problem(g, 0.5, 0.0, Hamiltonian::quadratic(),
                     [](std::span<const double>) { return 2.0; }, Forcing::zero(), 1.0);
    return check("Hopf-Lax keeps constants",
                 lp_norm(hopf_lax_oracle(pr, 0.7, g) - Field::constant(g, 2.0), kInfinity), 1e-10);
  });
  guard("monotone scheme with unit forcing", [&] {
    const ProblemSpec pr =
        make_problem(g, 0.5, 0.0, Hamiltonian::quadratic(),
                     [](std::span<const double>) { return 0.0; }, Forcing::constant(1.0), 1.0);
    const std::vector<double> t{0.5};
    const Field u = monotone_reference(pr, 4, t).at(0.5);
    return check("monotone scheme with unit forcing",
                 lp_norm(u - Field::constant(g, 0.5), kInfinity), 1e-12);
  });
  guard("dual with zero drift and eta = 0", [&] {
    const std::vector<double> t{0.0, 0.5, 1.0};
    const DriftField b = DriftField::from_function(
        g, DriftLayout::face, t, [](std::span<const double>, double, int) { return 0.0; });
    const Field a = Field::sample(g, [](std::span<const double> x) { return 1.0 + std::cos(x[0]); });
    const DualSolution sol = dual_solve(b, 0.0, a, 1.0);
    return check("dual with zero drift and eta = 0", lp_norm(sol.at(0.0) - a, kInfinity), 1e-14);
  });
  guard("dual heat decay", [&] {
    const std::vector<double> t{0.0, 0.5, 1.0};
    const DriftField b = DriftField::from_function(
        g, DriftLayout::nodal, t, [](std::span<const double>, double, int) { return 0.0; });
    const Field a = Field::sample(g, [](std::span<const double> x) { return 1.0 + std::cos(x[0]); });
    const DualSolution sol = dual_solve(b, 0.1, a, 1.0);
    const Field e =
        Field::sample(g, [](std::span<const double> x) { return 1.0 + std::exp(-0.1) * std::cos(x[0]); });
    return check("dual heat decay", lp_norm(sol.at(0.0) - e, kInfinity), 1e-8);
  });
  guard("Gronwall constant of a constant drift", [&] {
    const std::vector<double> t{0.0, 0.5, 1.0};
    const DriftField b = DriftField::from_function(
        g, DriftLayout::face, t, [](std::span<const double>, double, int) { return 0.7; });
    const Field a = Field::sample(g, [](std::span<const double> x) { return 1.0 + std::cos(x[0]); });
    const GronwallReport r = gronwall_check(dual_solve(b, 0.05, a, 1.0), b, 2.0);
    return SelftestCase{"Gronwall constant of a constant drift", r.pass && std::abs(r.constant - 1.0) < 1e-12,
                        "C = " + num(r.constant)};
  });
  guard("rate fit recovers 0.3 eps", [&] {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 6; ++i) {
      const double e = 0.1 / std::pow(2.0, i);
      pts.emplace_back(e, 0.3 * e);
    }
    const RateFit f = fit_rate(pts, RateModel::power);
    return check("rate fit recovers 0.3 eps", std::abs(f.exponent - 1.0) + std::abs(f.prefactor - 0.3), 1e-10);
  });
  guard("unknown config key is rejected", [&] {
    try {
      (void)ExperimentConfig::parse("s_list = 0.5\nbogus = 1\n");
    } catch (const ConfigError& e) {
      return SelftestCase{"unknown config key is rejected", e.line() == 2 && e.key() == "bogus", e.what()};
    }
    return SelftestCase{"unknown config key is rejected", false, "no error raised"};
  });
  return cases;
}

int run_command(const AppRequest& req, std::ostream& out, std::ostream& err) {
  const auto& names = subcommands();
  if (std::find(names.begin(), names.end(), req.command) == names.end()) {
    err << "unknown subcommand '" << req.command << "'\n";
    return kExitConfigError;
  }
  ExperimentConfig cfg;
  try {
    cfg = ExperimentConfig::load(req.config);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  }
  try {
    if (req.command == "selftest") return cmd_selftest(cfg, out);
    const fs::path dir = prepare_output(cfg, req);
    if (req.command == "solve") return cmd_solve(cfg, dir, out);
    if (req.command == "sweep") return cmd_sweep(cfg, dir, out, err);
    if (req.command == "dual-check") return cmd_dual_check(cfg, dir, out);
    if (req.command == "one-sided") return cmd_one_sided(cfg, dir, out);
    return cmd_report(cfg, dir, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfigError;
  } catch (const std::exception& e) {
    err << req.command << " failed: " << e.what() << "\n";
    return kExitFailedChecks;
  }
}

}  // namespace fracvisc
