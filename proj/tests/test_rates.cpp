#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "fracvisc/rate_harness.hpp"

using namespace fracvisc;

namespace {

std::vector<std::pair<double, double>> synthetic(double (*f)(double)) {
  std::vector<std::pair<double, double>> pts;
  for (int i = 4; i <= 10; ++i) {
    const double e = std::pow(2.0, -i);
    pts.emplace_back(e, f(e));
  }
  return pts;
}

SweepPlan small_plan(PointFunction u0, Hamiltonian H, double s, int n) {
  SweepPlan plan{.base = make_problem(TorusGrid(1, n), s, 0.1, std::move(H), std::move(u0),
                                      Forcing::zero(), 2.0)};
  for (int i = 2; i <= 6; ++i) plan.epsilons.push_back(std::pow(2.0, -i));
  plan.orders = {s};
  plan.norms = {2.0, kInfinity};
  plan.times = uniform_times(2.0, 4);
  plan.n_points = n;
  return plan;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(RateFit, PurePower) {
  const RateFit f = fit_rate(synthetic([](double e) { return std::pow(e, 0.75); }), RateModel::power);
  EXPECT_NEAR(f.exponent, 0.75, 1e-12);
  EXPECT_NEAR(f.prefactor, 1.0, 1e-12);
  EXPECT_LE(f.residual, 1e-12);
  EXPECT_NEAR(f.predict(0.01), std::pow(0.01, 0.75), 1e-12);
}

TEST(RateFit, PowerLogModelAndComparison) {
  const auto pts = synthetic([](double e) { return 0.5 * e * std::abs(std::log(e)); });
  const RateFit pl = fit_rate(pts, RateModel::power_log);
  const RateFit pw = fit_rate(pts, RateModel::power);
  EXPECT_LE(pl.residual, 1e-12);
  EXPECT_NEAR(pl.prefactor, 0.5, 1e-12);
  EXPECT_NEAR(pl.free_slope, 1.0, 1e-12);
  // eps|log eps| decays more slowly than eps on [2^-10, 2^-4]: frozen value of the OLS slope.
  EXPECT_NEAR(pw.exponent, 0.78297, 1e-5);
  EXPECT_GE(pw.residual, 20.0 * std::max(pl.residual, 1e-15));
  const ModelComparison c = compare_models(pw, pl);
  EXPECT_TRUE(c.distinguishable);
  EXPECT_EQ(c.preferred, RateModel::power_log);
}

TEST(RateFit, IndistinguishableWhenResidualsClose) {
  RateFit a{.model = RateModel::power, .residual = 0.010};
  RateFit b{.model = RateModel::power_log, .residual = 0.011};
  EXPECT_FALSE(compare_models(a, b).distinguishable);
}

TEST(RateFit, RejectsDegenerateInput) {
  auto pts = synthetic([](double e) { return e; });
  pts.resize(4);
  EXPECT_THROW(fit_rate(pts, RateModel::power), std::invalid_argument);
  auto bad = synthetic([](double e) { return e; });
  bad[2].second = 0.0;
  EXPECT_THROW(fit_rate(bad, RateModel::power), std::invalid_argument);
  EXPECT_THROW(fit_rate(synthetic([](double) { return 0.3; }), RateModel::power), std::invalid_argument);
}

TEST(RateTarget, RegimeMap) {
  EXPECT_NEAR(rate_target(0.25, kInfinity)->exponent, 1.0, 0);
  EXPECT_EQ(rate_target(0.5, kInfinity)->model, RateModel::power_log);
  EXPECT_EQ(rate_target(0.5, 2.0)->model, RateModel::power);
  EXPECT_NEAR(rate_target(0.75, kInfinity)->exponent, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(rate_target(1.0, 2.0)->exponent, 0.75, 1e-15);
  EXPECT_NEAR(rate_target(1.0, kInfinity)->exponent, 0.5, 1e-15);
  EXPECT_FALSE(rate_target(0.5, 1.0).has_value());
}

TEST(Sweep, ZeroProblemHasZeroErrors) {
  const SweepPlan plan = small_plan([](auto) { return 0.0; }, Hamiltonian::quadratic(), 0.5, 64);
  const SweepResult r = run_sweep(plan, 2);
  for (const auto& c : r.cells) {
    ASSERT_TRUE(c.ok) << c.message;
    for (double e : c.errors) EXPECT_LE(e, 1e-12);
  }
  const OneSidedReport os = one_sided_check(r, 0.5);
  for (double b : os.bounds) EXPECT_EQ(b, 0.0);
  for (double e : os.errors) EXPECT_EQ(e, 0.0);
  EXPECT_TRUE(os.hypothesis_uniform);
  EXPECT_TRUE(os.pass);
}

TEST(Sweep, LinearHeatClosedForm) {
  const SweepPlan plan =
      small_plan([](std::span<const double> x) { return std::cos(x[0]); }, Hamiltonian::zero(), 1.0, 64);
  const SweepResult r = run_sweep(plan, 1);
  for (const auto& c : r.cells) {
    ASSERT_TRUE(c.ok) << c.message;
    EXPECT_NEAR(c.errors[0], (1.0 - std::exp(-2.0 * c.epsilon)) * std::sqrt(M_PI), 1e-8);
  }
  EXPECT_EQ(rate_rows(r).front().ref_kind, "exact");
}

TEST(Sweep, ErrorsDecreaseAtHalfOrder) {
  const SweepPlan plan =
      small_plan([](std::span<const double> x) { return std::cos(x[0]); }, Hamiltonian::quadratic(), 0.5, 1024);
  const SweepResult r = run_sweep(plan, 2);
  for (double p : {2.0, kInfinity}) {
    const auto table = r.table(0.5, p);
    ASSERT_EQ(table.size(), plan.epsilons.size());
    for (std::size_t i = 1; i < table.size(); ++i) EXPECT_LT(table[i].second, table[i - 1].second);
  }
}

TEST(Sweep, ThreadCountDoesNotChangeRows) {
  const SweepPlan plan =
      small_plan([](std::span<const double> x) { return std::cos(x[0]); }, Hamiltonian::quadratic(), 0.5, 256);
  const auto dir = std::filesystem::temp_directory_path() / "fracvisc_det_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_rates_csv(rate_rows(run_sweep(plan, 1)), dir / "a.csv");
  write_rates_csv(rate_rows(run_sweep(plan, 3)), dir / "b.csv");
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
  std::filesystem::remove_all(dir);
}

TEST(Sweep, RowCountAndFailedCells) {
  SweepPlan plan =
      small_plan([](std::span<const double> x) { return std::cos(x[0]); }, Hamiltonian::quadratic(), 0.5, 64);
  plan.solver.scheme = Scheme::integrating_factor_rk4;  // under-resolved for the small epsilons
  const SweepResult r = run_sweep(plan, 1);
  int failed = 0;
  for (const auto& c : r.cells) {
    if (!c.ok) {
      ++failed;
      EXPECT_FALSE(c.message.empty());
    }
  }
  EXPECT_GT(failed, 0);
  EXPECT_EQ(rate_rows(r).size(), (plan.epsilons.size() - failed) * plan.norms.size());
}

TEST(Sweep, PlanValidation) {
  SweepPlan plan = small_plan([](auto) { return 0.0; }, Hamiltonian::quadratic(), 0.5, 64);
  plan.epsilons.pop_back();
  EXPECT_THROW(plan.validate(), std::invalid_argument);
  plan = small_plan([](auto) { return 0.0; }, Hamiltonian::quadratic(), 0.5, 64);
  std::swap(plan.epsilons[0], plan.epsilons[1]);
  EXPECT_THROW(plan.validate(), std::invalid_argument);
  plan = small_plan([](auto) { return 0.0; }, Hamiltonian::quadratic(), 0.5, 64);
  plan.base.forcing = Forcing::constant(1.0);
  EXPECT_THROW(plan.validate(), std::invalid_argument);
  EXPECT_EQ(ReferenceSpec::parse("monotone:8").fine_factor, 8);
  EXPECT_EQ(ReferenceSpec::parse(ReferenceSpec::parse("monotone:6").describe()).fine_factor, 6);
  EXPECT_THROW(ReferenceSpec::parse("monotone:2"), std::invalid_argument);
}

TEST(Sweep, WorkerCountFromEnvironment) {
  ::setenv("FRACVISC_THREADS", "3", 1);
  EXPECT_EQ(worker_count(), 3);
  ::setenv("FRACVISC_THREADS", "zero", 1);
  EXPECT_GE(worker_count(), 1);
  ::unsetenv("FRACVISC_THREADS");
}

TEST(Report, CsvRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "fracvisc_csv_test";
  std::filesystem::create_directories(dir);
  const std::vector<RateRow> rows{{0.5, 2.0, 0.0625, 0.01, 1.7, "hopf_lax"},
                                  {0.5, kInfinity, 0.0625, 0.02, 1.0, "hopf_lax"}};
  write_rates_csv(rows, dir / "rates.csv");
  const std::string text = slurp(dir / "rates.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "s,p,epsilon,error,norm,ref_kind");
  EXPECT_NE(text.find("5.0000000000000000e-01,inf,6.2500000000000000e-02"), std::string::npos);
  const auto back = read_rates_csv(dir / "rates.csv");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_TRUE(std::isinf(back[1].p));
  EXPECT_EQ(back[0].error, 0.01);
  std::filesystem::remove_all(dir);
}

TEST(Report, FitJsonRoundTrip) {
  FitVerdict v{.s = 0.5, .p = kInfinity, .target = rate_target(0.5, kInfinity)};
  v.fit = fit_rate(synthetic([](double e) { return 0.5 * e * std::abs(std::log(e)); }), RateModel::power_log);
  const FitVerdict back = fit_from_json(fit_to_json(v));
  EXPECT_EQ(fit_to_json(back), fit_to_json(v));
  EXPECT_TRUE(std::isinf(back.p));
}

TEST(Report, EmitWritesThreeFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "fracvisc_emit_test";
  std::filesystem::remove_all(dir);
  std::vector<RateRow> rows;
  for (const auto& [e, err] : synthetic([](double x) { return 2 * x; })) rows.push_back({0.25, 2.0, e, err, 1.0, "hopf_lax"});
  const auto verdicts = fit_rows(rows);
  ASSERT_EQ(verdicts.size(), 1u);
  EXPECT_TRUE(verdicts[0].pass);
  emit_report(rows, verdicts, {{"s_list", {0.25}}}, dir);
  for (const char* f : {"rates.csv", "report.json", "plots.gp"}) EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  const auto j = nlohmann::json::parse(slurp(dir / "report.json"));
  EXPECT_EQ(j["config"]["s_list"][0], 0.25);
  EXPECT_NEAR(j["fits"][0]["exponent"].get<double>(), 1.0, 1e-12);
  EXPECT_THROW(emit_report(rows, {}, {}, dir), std::invalid_argument);
  std::filesystem::remove_all(dir);
}

TEST(Report, PFormatting) {
  EXPECT_EQ(format_p(kInfinity), "inf");
  EXPECT_EQ(format_p(1.5), "1.5");
  EXPECT_TRUE(std::isinf(parse_p("inf")));
  EXPECT_THROW(parse_p("0.5"), std::invalid_argument);
}
