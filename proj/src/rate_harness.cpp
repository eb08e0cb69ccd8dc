#include "fracvisc/rate_harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace fracvisc {

namespace {

bool same(double a, double b) { return std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)); }

FractionalSymbol symbol_of(const Trajectory& traj) {
  return traj.scheme == Scheme::hopf_lax_splitting ? FractionalSymbol::grid_laplacian
                                                   : FractionalSymbol::fourier;
}

// Reference snapshots on the error grid at plan.times.
std::vector<Field> reference_snapshots(const SweepPlan& plan, const TorusGrid& grid) {
  const ProblemSpec inviscid = plan.base.on_grid(grid).with_epsilon(0.0);
  std::vector<Field> out;
  // Linear transport-free case: u(t) = u0 exactly.
  if (plan.base.hamiltonian.kind() == HamiltonianKind::zero && plan.base.forcing.is_zero()) {
    out.assign(plan.times.size(), inviscid.u0);
    return out;
  }
  if (plan.reference.kind == ReferenceKind::hopf_lax) {
    for (double t : plan.times) out.push_back(hopf_lax_oracle(inviscid, t, grid));
    return out;
  }
  const Trajectory ref = monotone_reference(inviscid, plan.reference.fine_factor, plan.times);
  for (double t : plan.times) out.push_back(ref.at(t));
  return out;
}

SweepCell run_cell(const SweepPlan& plan, double s, double epsilon, const TorusGrid& error_grid,
                   const std::vector<Field>& reference) {
  SweepCell cell{.s = s, .epsilon = epsilon, .n_points = plan.grid_points(epsilon, s)};
  try {
    const TorusGrid grid(plan.base.grid.dim(), cell.n_points);
    const ProblemSpec problem = plan.base.on_grid(grid).with_epsilon(epsilon).with_order(s);
    const Trajectory traj = viscous_solve(problem, plan.solver, plan.times);
    cell.errors.assign(plan.norms.size(), 0.0);
    cell.reference_norms.assign(plan.norms.size(), 0.0);
    cell.half_laplacian_bound = -kInfinity;
    for (std::size_t j = 0; j < plan.times.size(); ++j) {
      const Field& u = traj.at(plan.times[j]);
      const Field diff = subsample(u, error_grid) - reference[j];
      for (std::size_t k = 0; k < plan.norms.size(); ++k) {
        cell.errors[k] = std::max(cell.errors[k], lp_norm(diff, plan.norms[k]));
        cell.reference_norms[k] = std::max(cell.reference_norms[k], lp_norm(reference[j], plan.norms[k]));
      }
      cell.one_sided_error = std::max(cell.one_sided_error, diff.max());
      const Field lap = frac_laplacian(u, 0.5, symbol_of(traj));
      cell.half_laplacian_bound = std::max(cell.half_laplacian_bound, -lap.min());
    }
    cell.times = traj.times;
    cell.semiconcavity = traj.semiconcavity;
    cell.gradient_sup = traj.gradient_sup;
    cell.ok = true;
  } catch (const std::exception& e) {
    cell.ok = false;
    cell.message = e.what();
  }
  return cell;
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

// ------------------------------------------------------------ plan

ReferenceSpec ReferenceSpec::parse(std::string_view text) {
  if (text == "hopf_lax") return {};
  if (text.starts_with("monotone")) {
    ReferenceSpec r{.kind = ReferenceKind::monotone};
    if (text.size() > 8) {
      if (text[8] != ':') throw std::invalid_argument("reference must be hopf_lax or monotone:<factor>");
      const std::string factor(text.substr(9));
      std::size_t used = 0;
      r.fine_factor = std::stoi(factor, &used);
      if (used != factor.size()) throw std::invalid_argument("bad monotone factor '" + factor + "'");
    }
    if (r.fine_factor < 4) throw std::invalid_argument("monotone fine factor must be >= 4");
    return r;
  }
  throw std::invalid_argument("reference must be hopf_lax or monotone:<factor>");
}

std::string ReferenceSpec::describe() const {
  return kind == ReferenceKind::hopf_lax ? "hopf_lax" : "monotone:" + std::to_string(fine_factor);
}

void SweepPlan::validate() const {
  if (epsilons.size() < 5) throw std::invalid_argument("a sweep needs at least 5 epsilon values");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    if (!(epsilons[i] > 0.0)) throw std::invalid_argument("epsilon values must be positive");
    if (i > 0 && !(epsilons[i] < epsilons[i - 1])) {
      throw std::invalid_argument("epsilon list must be strictly decreasing");
    }
  }
  if (std::log2(epsilons.front() / epsilons.back()) < 4.0 - 1e-9) {
    throw std::invalid_argument("epsilon list must span at least 4 octaves");
  }
  if (orders.empty() || norms.empty() || times.empty()) {
    throw std::invalid_argument("s list, p list and snapshot times must be non-empty");
  }
  for (double s : orders) {
    if (!(s > 0.0 && s <= 1.0)) throw std::invalid_argument("s values must lie in (0, 1]");
  }
  for (double p : norms) {
    if (!(p >= 1.0)) throw std::invalid_argument("p values must be >= 1 or inf");
  }
  if (reference.kind == ReferenceKind::hopf_lax && !base.forcing.is_zero()) {
    throw std::invalid_argument("the hopf_lax reference requires zero forcing");
  }
}

int SweepPlan::grid_points(double epsilon, double s) const {
  if (n_points > 0) return n_points;
  return resolution_rule(epsilon, s, 6, min_points, max_points);
}

std::vector<std::pair<double, double>> SweepResult::table(double s, double p) const {
  const auto k = std::find_if(plan.norms.begin(), plan.norms.end(), [&](double q) {
                   return q == p || (std::isinf(q) && std::isinf(p));
                 }) - plan.norms.begin();
  if (k == static_cast<std::ptrdiff_t>(plan.norms.size())) throw std::invalid_argument("norm not in plan");
  std::vector<std::pair<double, double>> out;
  for (const auto& c : cells) {
    if (c.ok && same(c.s, s)) out.emplace_back(c.epsilon, c.errors[k]);
  }
  return out;
}

int worker_count() {
  if (const char* env = std::getenv("FRACVISC_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

SweepResult run_sweep(const SweepPlan& plan, int threads) {
  plan.validate();
  int coarsest = std::numeric_limits<int>::max();
  for (double s : plan.orders) {
    for (double eps : plan.epsilons) coarsest = std::min(coarsest, plan.grid_points(eps, s));
  }
  const TorusGrid error_grid(plan.base.grid.dim(), coarsest);
  const std::vector<Field> reference = reference_snapshots(plan, error_grid);

  SweepResult result{.plan = plan};
  std::vector<std::pair<double, double>> jobs;
  for (double s : plan.orders) {
    for (double eps : plan.epsilons) jobs.emplace_back(s, eps);
  }
  result.cells.resize(jobs.size());
  const int workers = std::clamp(threads > 0 ? threads : worker_count(), 1,
                                 static_cast<int>(jobs.size()));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      result.cells[i] = run_cell(plan, jobs[i].first, jobs[i].second, error_grid, reference);
    }
  };
  {
    std::vector<std::jthread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
  }
  return result;
}

// ------------------------------------------------------------ fits

std::string to_string(RateModel model) {
  return model == RateModel::power ? "power" : "power_log";
}

RateModel parse_rate_model(std::string_view text) {
  if (text == "power") return RateModel::power;
  if (text == "power_log") return RateModel::power_log;
  throw std::invalid_argument("unknown rate model '" + std::string(text) + "'");
}

double RateFit::predict(double epsilon) const {
  if (model == RateModel::power) return prefactor * std::pow(epsilon, exponent);
  return prefactor * epsilon * std::abs(std::log(epsilon));
}

RateFit fit_rate(const std::vector<std::pair<double, double>>& points, RateModel model) {
  if (points.size() < 5) throw std::invalid_argument("rate fit needs at least 5 points");
  std::vector<double> x, y;
  for (const auto& [eps, err] : points) {
    if (!(eps > 0.0) || !(err > 0.0) || !std::isfinite(err)) {
      throw std::invalid_argument("rate fit needs positive epsilon and error values");
    }
    if (model == RateModel::power_log && !(eps < 1.0)) {
      throw std::invalid_argument("power_log fit needs epsilon < 1");
    }
    x.push_back(model == RateModel::power ? std::log(eps) : std::log(eps * std::abs(std::log(eps))));
    y.push_back(std::log(err));
  }
  const double mx = mean_of(x), my = mean_of(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("rate fit needs distinct epsilon values");
  if (syy <= 1e-300 && sxx > 0.0 && model == RateModel::power) {
    throw std::invalid_argument("rate fit rejects a constant error table");
  }
  RateFit fit{.model = model, .points = points};
  const double slope = sxy / sxx;
  double intercept = 0.0;
  if (model == RateModel::power) {
    fit.exponent = slope;
    intercept = my - slope * mx;
  } else {
    fit.exponent = 1.0;
    fit.free_slope = slope;
    intercept = my - mx;
  }
  fit.prefactor = std::exp(intercept);
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (intercept + fit.exponent * x[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / static_cast<double>(x.size()));
  return fit;
}

ModelComparison compare_models(const RateFit& power, const RateFit& power_log) {
  const double lo = std::min(power.residual, power_log.residual);
  const double hi = std::max(power.residual, power_log.residual);
  ModelComparison c;
  c.preferred = power.residual <= power_log.residual ? RateModel::power : RateModel::power_log;
  c.distinguishable = hi > 0.0 && (hi - lo) >= 0.2 * hi;
  return c;
}

std::optional<RateTarget> rate_target(double s, double p) {
  const bool sup = std::isinf(p);
  if (!(p > 1.0)) return std::nullopt;
  if (s < 0.5) return RateTarget{1.0, RateModel::power};
  if (s == 0.5) return RateTarget{1.0, sup ? RateModel::power_log : RateModel::power};
  if (s < 1.0) return RateTarget{1.0 / (2.0 * s), RateModel::power};
  if (s == 1.0) return RateTarget{sup ? 0.5 : 0.5 + 1.0 / (2.0 * p), RateModel::power};
  return std::nullopt;
}

double acceptance_slope(const RateFit& fit) {
  return fit.model == RateModel::power ? fit.exponent : fit.free_slope;
}

std::vector<FitVerdict> fit_all(const SweepResult& result) {
  std::vector<FitVerdict> out;
  for (double s : result.plan.orders) {
    for (double p : result.plan.norms) {
      const auto table = result.table(s, p);
      if (table.size() < 5) continue;
      FitVerdict v{.s = s, .p = p, .target = rate_target(s, p)};
      try {
        v.fit = fit_rate(table, v.target ? v.target->model : RateModel::power);
      } catch (const std::invalid_argument&) {
        continue;
      }
      v.pass = !v.target || acceptance_slope(v.fit) >= v.target->exponent - 0.1;
      out.push_back(std::move(v));
    }
  }
  return out;
}

// ------------------------------------------------------------ one-sided

std::pair<double, double> one_sided_measure(const Trajectory& trajectory,
                                            const std::vector<Field>& reference) {
  if (reference.size() + 1 != trajectory.size() && reference.size() != trajectory.size()) {
    throw std::invalid_argument("reference snapshot count does not match the trajectory");
  }
  const std::size_t offset = trajectory.size() - reference.size();
  double bound = -kInfinity, err = 0.0;
  for (std::size_t j = 0; j < trajectory.size(); ++j) {
    const Field& u = trajectory.snapshots[j];
    bound = std::max(bound, -frac_laplacian(u, 0.5, symbol_of(trajectory)).min());
    if (j >= offset) {
      const Field& ref = reference[j - offset];
      err = std::max(err, (subsample(u, ref.grid()) - ref).max());
    }
  }
  return {bound, std::max(0.0, err)};
}

OneSidedReport one_sided_check(const SweepResult& result, double s) {
  OneSidedReport rep;
  for (const auto& c : result.cells) {
    if (!c.ok || !same(c.s, s)) continue;
    rep.epsilons.push_back(c.epsilon);
    rep.bounds.push_back(c.half_laplacian_bound);
    rep.errors.push_back(std::max(0.0, c.one_sided_error));
  }
  if (rep.bounds.empty()) {
    rep.pass = false;
    return rep;
  }
  const auto [lo, hi] = std::minmax_element(rep.bounds.begin(), rep.bounds.end());
  rep.spread = *hi > 0.0 ? (*hi - *lo) / *hi : 0.0;
  rep.hypothesis_uniform = rep.spread < 0.2;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < rep.epsilons.size(); ++i) {
    if (rep.errors[i] > 0.0) pts.emplace_back(rep.epsilons[i], rep.errors[i]);
  }
  if (pts.size() >= 5) rep.fit = fit_rate(pts, RateModel::power);
  if (rep.hypothesis_uniform) {
    const bool all_zero = pts.empty();
    rep.pass = all_zero || (rep.fit && rep.fit->exponent >= 0.9);
  }
  return rep;
}

}  // namespace fracvisc
