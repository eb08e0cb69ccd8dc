#include <cmath>
#include <filesystem>

#include <gtest/gtest.h>

#include "fracvisc/dual_transport.hpp"

using namespace fracvisc;

namespace {

double sup_diff(const Field& a, const Field& b) { return lp_norm(a - b, kInfinity); }

ProblemSpec benchmark(int n, double s, double eps, double T = 2.0) {
  return make_problem(TorusGrid(1, n), s, eps, Hamiltonian::quadratic(),
                      [](std::span<const double> x) { return std::cos(x[0]); }, Forcing::zero(), T);
}

Field bump(const TorusGrid& g) {
  Field a = Field::sample(g, [](std::span<const double> x) { return std::exp(2.0 * (std::cos(x[0] - 1.0) - 1.0)); });
  a *= 1.0 / integral(a);
  return a;
}

// Viscous pair on a shared grid, post-shock.
struct Pair {
  ProblemSpec pe, ph;
  Trajectory te, th;
};

Pair make_pair(double eps, double eta, int n, int snapshots) {
  Pair p{benchmark(n, 0.5, eps), benchmark(n, 0.5, eta), Trajectory{.grid = TorusGrid(1, n)},
         Trajectory{.grid = TorusGrid(1, n)}};
  const auto t = uniform_times(2.0, snapshots);
  p.te = viscous_solve(p.pe, {}, t);
  p.th = viscous_solve(p.ph, {}, t);
  return p;
}

}  // namespace

TEST(Drift, ZeroTrajectoriesGiveZeroDrift) {
  const ProblemSpec p = make_problem(TorusGrid(1, 32), 0.5, 0.1, Hamiltonian::quadratic(),
                                     [](auto) { return 0.0; }, Forcing::zero(), 1.0);
  const std::vector<double> t{0.5, 1.0};
  const Trajectory tr = viscous_solve(p, {}, t);
  for (auto layout : {DriftLayout::nodal, DriftLayout::face}) {
    const DriftField b = build_drift(tr, tr, p.hamiltonian, 3, layout);
    EXPECT_EQ(b.sup_abs(), 0.0);
    EXPECT_EQ(b.div_minus_integral(0.0, 1.0), 0.0);
  }
}

TEST(Drift, QuadraticIsMinusAverageGradient) {
  const ProblemSpec pe = make_problem(TorusGrid(1, 64), 1.0, 0.1, Hamiltonian::quadratic(),
                                      [](std::span<const double> x) { return std::cos(x[0]); },
                                      Forcing::zero(), 0.5);
  const std::vector<double> t{0.25, 0.5};
  const Trajectory te = viscous_solve(pe, {.scheme = Scheme::integrating_factor_rk4}, t);
  const Trajectory th = viscous_solve(pe.with_epsilon(0.05), {.scheme = Scheme::integrating_factor_rk4}, t);
  const DriftField b = build_drift(te, th, pe.hamiltonian, 2, DriftLayout::nodal);
  for (std::size_t j = 0; j < te.size(); ++j) {
    const Field expected =
        -0.5 * (spectral_gradient(te.snapshots[j])[0] + spectral_gradient(th.snapshots[j])[0]);
    EXPECT_LE(sup_diff(b.components[j][0], expected), 1e-12);
  }
}

TEST(Drift, FaceLayoutUsesOneSidedDifferences) {
  const ProblemSpec pe = benchmark(64, 0.5, 0.1, 0.5);
  const std::vector<double> t{0.5};
  const Trajectory te = viscous_solve(pe, {}, t);
  const DriftField b = build_drift(te, te, pe.hamiltonian, 2, DriftLayout::face);
  const Field& u = te.at(0.5);
  const double h = pe.grid.spacing();
  for (std::size_t i = 0; i < u.size(); ++i) {
    EXPECT_NEAR(b.components[1][0][i], -(u[(i + 1) % u.size()] - u[i]) / h, 1e-12);
  }
}

TEST(Drift, GaussLegendreIntegratesNonQuadraticHamiltonian) {
  // b = -int DH(z a + (1 - z) c) dz for H = cosh p - 1 + c p^2/2 is (cosh a - cosh c)/(a - c) + c_reg (a + c)/2.
  const TorusGrid g(1, 32);
  const std::vector<double> t{0.0};
  const Hamiltonian H = Hamiltonian::log_cosh_regularized(0.1);
  Trajectory te{.grid = g, .times = t, .snapshots = {Field::sample(g, [](auto x) { return 0.7 * std::sin(x[0]); })}};
  Trajectory th{.grid = g, .times = t, .snapshots = {Field::sample(g, [](auto x) { return 0.2 * std::sin(x[0]); })}};
  te.s = th.s = 0.5;
  const DriftField b = build_drift(te, th, H, 8, DriftLayout::nodal);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double x = g.coordinate(static_cast<int>(i));
    const double a = 0.7 * std::cos(x), c = 0.2 * std::cos(x);
    const double exact = std::abs(a - c) < 1e-12 ? std::sinh(a) + 0.1 * a
                                                 : (std::cosh(a) - std::cosh(c)) / (a - c) + 0.05 * (a + c);
    worst = std::max(worst, std::abs(b.components[0][0][i] + exact));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(DualSolve, FrozenCosineDriftConservesMassAndSelfConverges) {
  const std::vector<double> t = uniform_times(1.0, 8);
  std::vector<double> times{0.0};
  times.insert(times.end(), t.begin(), t.end());
  auto run = [&](int n) {
    const TorusGrid g(1, n);
    const DriftField b = DriftField::from_function(
        g, DriftLayout::nodal, times, [](std::span<const double> x, double, int) { return -std::cos(x[0]); });
    return dual_solve(b, 0.05, bump(g), 1.0);
  };
  const DualSolution coarse = run(128);
  const DualSolution fine = run(512);  // 4x nodes, dt shrinks 4x with h
  for (double m : coarse.mean) EXPECT_NEAR(m, coarse.mean.back(), 1e-12);
  EXPECT_LE(std::abs(lp_norm(coarse.at(0.0), 2.0) - lp_norm(fine.at(0.0), 2.0)), 1e-6);
}

TEST(DualSolve, ZeroDriftWithoutDiffusionIsIdentity) {
  const TorusGrid g(1, 64);
  const std::vector<double> t{0.0, 1.0};
  const DriftField b = DriftField::from_function(g, DriftLayout::face, t, [](auto, double, int) { return 0.0; });
  const Field a = bump(g);
  EXPECT_LE(sup_diff(dual_solve(b, 0.0, a, 1.0).at(0.0), a), 1e-15);
}

TEST(DualSolve, DiffusionContractsEveryLq) {
  const TorusGrid g(1, 128);
  const std::vector<double> t = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (auto layout : {DriftLayout::nodal, DriftLayout::face}) {
    const DriftField b = DriftField::from_function(g, layout, t, [](auto, double, int) { return 0.0; });
    const DualSolution sol = dual_solve(b, 0.1, bump(g), 1.0);
    for (double q : {1.5, 2.0, 4.0, kInfinity}) {
      for (std::size_t i = 1; i < sol.times.size(); ++i) {
        // Backward in time the norm can only drop.
        EXPECT_LE(lp_norm(sol.snapshots[i - 1], q), lp_norm(sol.snapshots[i], q) * (1 + 1e-12));
      }
    }
  }
}

TEST(DualSolve, ConstantDriftTranslates) {
  // rho(t, x) = alpha(x + c (tau - t)) solves -rho_t + c rho_x = 0 backwards from tau.
  const TorusGrid g(1, 128);
  const std::vector<double> t{0.0, 0.5, 1.0};
  const DriftField b = DriftField::from_function(g, DriftLayout::nodal, t, [](auto, double, int) { return 1.0; });
  const Field a = Field::sample(g, [](auto x) { return 1.0 + 0.5 * std::cos(x[0]); });
  const DualSolution sol = dual_solve(b, 0.0, a, 1.0);
  const Field e = Field::sample(g, [](auto x) { return 1.0 + 0.5 * std::cos(x[0] - 1.0); });
  EXPECT_LE(sup_diff(sol.at(0.0), e), 1e-8);
}

TEST(DualSolve, FiniteVolumeKeepsPositivityAndMass) {
  const Pair pr = make_pair(0.1, 0.05, 512, 32);
  const DriftField b = build_drift(pr.te, pr.th, pr.pe.hamiltonian, 4);
  const Field a = dual_datum(pr.te.at(2.0) - pr.th.at(2.0), 2.0, true);
  for (auto flux : {FluxScheme::upwind, FluxScheme::limited}) {
    const DualSolution sol = dual_solve(b, 0.05, a, 2.0, {.flux = flux});
    for (std::size_t i = 0; i < sol.times.size(); ++i) {
      EXPECT_GE(sol.min[i], -1e-6 * a.max());
      EXPECT_NEAR(sol.mean[i], mean(a), 1e-12 * std::abs(mean(a)));
    }
  }
}

TEST(Gronwall, BoundHoldsAndConstantIsEtaIndependent) {
  const Pair pr = make_pair(0.1, 0.05, 512, 32);
  const DriftField b = build_drift(pr.te, pr.th, pr.pe.hamiltonian, 4);
  const Field a = dual_datum(pr.te.at(2.0) - pr.th.at(2.0), 2.0, true);
  for (double q : {2.0, 4.0}) {
    double constant = -1.0;
    for (double eta : {0.1, 0.05, 0.025}) {
      const GronwallReport r = gronwall_check(dual_solve(b, eta, a, 2.0), b, q);
      EXPECT_TRUE(r.pass) << "q " << q << " eta " << eta << " margin " << r.worst_margin;
      EXPECT_GT(r.worst_margin, 0.0);
      if (constant < 0.0) constant = r.constant;
      EXPECT_EQ(r.constant, constant);
    }
    // Riccati constant dominates the drift's own constant.
    EXPECT_LE(constant, riccati_gronwall_constant(pr.pe, 2.0, q) * (1 + 1e-9));
  }
}

TEST(Gronwall, RiccatiConstantClosedForm) {
  // k(t) = 1/(1+t): exp((q-1) log(1+tau))^(1/q) = (1+tau)^((q-1)/q).
  const ProblemSpec p = benchmark(64, 0.5, 0.1);
  EXPECT_NEAR(riccati_gronwall_constant(p, 2.0, 2.0), std::sqrt(3.0), 1e-12);
  EXPECT_NEAR(riccati_gronwall_constant(p, 2.0, 4.0), std::pow(3.0, 0.75), 1e-12);
}

TEST(Divergence, LowerBoundFromSemiconcavity) {
  const Pair pr = make_pair(0.1, 0.05, 512, 32);
  const DriftField b = build_drift(pr.te, pr.th, pr.pe.hamiltonian, 4);
  const auto k = semiconcavity_profile(pr.te, pr.pe).riccati_bound;
  const DivergenceCheck c = divergence_lower_bound(b, k, pr.pe.hamiltonian.Theta());
  EXPECT_TRUE(c.pass) << c.worst;
}

TEST(Duality, EqualViscositiesGiveZero) {
  const ProblemSpec p = benchmark(128, 0.5, 0.1);
  const auto t = uniform_times(2.0, 8);
  const Trajectory te = viscous_solve(p, {}, t);
  const DriftField b = build_drift(te, te, p.hamiltonian, 2);
  const Field a = Field::constant(p.grid, 1.0);
  const DualityResidual r = duality_residual(te, te, dual_solve(b, 0.1, a, 2.0), 2.0);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.rhs, 0.0);
}

TEST(Duality, LinearCaseIsExact) {
  const TorusGrid g(1, 64);
  const auto u0 = [](std::span<const double> x) { return std::cos(x[0]); };
  const ProblemSpec pe = make_problem(g, 0.5, 0.1, Hamiltonian::zero(), u0, Forcing::zero(), 2.0);
  const auto t = uniform_times(2.0, 256);
  const Trajectory te = viscous_solve(pe, {}, t);
  const Trajectory th = viscous_solve(pe.with_epsilon(0.05), {}, t);
  // w = (e^{-eps t} - e^{-eta t}) cos x in closed form.
  const double w_coeff = std::exp(-0.2) - std::exp(-0.1);
  EXPECT_LE(sup_diff(te.at(2.0) - th.at(2.0), w_coeff * Field::sample(g, u0)), 1e-12);
  const DriftField b = build_drift(te, th, Hamiltonian::zero(), 2, DriftLayout::nodal);
  const Field a = Field::sample(g, [](auto x) { return 1.5 + std::cos(x[0]) + 0.3 * std::sin(2 * x[0]); });
  const DualityResidual r = duality_residual(te, th, dual_solve(b, 0.05, a, 2.0), 2.0);
  EXPECT_NEAR(r.lhs, w_coeff * M_PI, 1e-12);
  EXPECT_LE(r.residual, 1e-6);
}

TEST(Duality, NonlinearResidualShrinksWithSnapshots) {
  double previous = kInfinity;
  for (int snaps : {64, 256}) {
    const Pair pr = make_pair(0.1, 0.05, 1024, snaps);
    const DriftField b = build_drift(pr.te, pr.th, pr.pe.hamiltonian, 4);
    const Field a = dual_datum(pr.te.at(2.0) - pr.th.at(2.0), 2.0, true);
    const DualityResidual r =
        duality_residual(pr.te, pr.th, dual_solve(b, 0.05, a, 2.0, {.flux = FluxScheme::limited}), 2.0);
    EXPECT_LE(r.residual, 0.02) << snaps;
    EXPECT_LT(r.residual, previous);
    previous = r.residual;
  }
}

TEST(DualDatum, NormalizedInConjugateNorm) {
  const TorusGrid g(1, 64);
  const Field w = Field::sample(g, [](auto x) { return std::sin(x[0]); });
  for (double p : {1.5, 2.0, 4.0}) {
    const Field a = dual_datum(w, p, true);
    EXPECT_NEAR(lp_norm(a, p / (p - 1)), 1.0, 1e-12);
    EXPECT_GE(a.min(), 0.0);
    // Holder equality: int w a = ||w^+||_p.
    Field wp(g);
    for (std::size_t i = 0; i < g.size(); ++i) wp[i] = std::max(0.0, w[i]);
    EXPECT_NEAR(inner_product(w, a), lp_norm(wp, p), 1e-12);
  }
  EXPECT_THROW(dual_datum(w, 1.0, true), std::invalid_argument);
}

TEST(DualExport, WritesRhoSnapshots) {
  const TorusGrid g(1, 32);
  const std::vector<double> t{0.0, 1.0};
  const DriftField b = DriftField::from_function(g, DriftLayout::face, t, [](auto, double, int) { return 0.0; });
  const DualSolution sol = dual_solve(b, 0.05, bump(g), 1.0);
  const auto dir = std::filesystem::temp_directory_path() / "fracvisc_rho_test";
  std::filesystem::remove_all(dir);
  const auto files = export_dual(sol, 0.5, dir);
  ASSERT_EQ(files.size(), 2u);
  EXPECT_EQ(files[0].filename().string(), "rho_s0.5_eps0.05_t0.csv");
  std::filesystem::remove_all(dir);
}
