#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "fracvisc/hamiltonian.hpp"

using namespace fracvisc;

TEST(Hamiltonian, QuadraticAtOrigin) {
  const auto e = Hamiltonian::quadratic().eval(vec({0.0, 0.0}));
  EXPECT_EQ(e.value, 0.0);
  EXPECT_EQ(e.gradient.norm(), 0.0);
  EXPECT_TRUE(e.hessian.isApprox(Mat::Identity(2, 2)));
}

TEST(Hamiltonian, QuadraticValue) { EXPECT_DOUBLE_EQ(Hamiltonian::quadratic().value(vec({3, 4})), 12.5); }

TEST(Hamiltonian, LogCoshAgainstFiniteDifferences) {
  const Hamiltonian H = Hamiltonian::log_cosh_regularized(0.1);
  const auto e = H.eval(vec({1.0}));
  EXPECT_NEAR(e.value, std::cosh(1.0) - 1.0 + 0.05, 1e-15);
  EXPECT_NEAR(e.gradient[0], std::sinh(1.0) + 0.1, 1e-15);
  const double h = 1e-5;
  const double fd = (H.value(vec({1 + h})) - H.value(vec({1 - h}))) / (2 * h);
  EXPECT_NEAR(e.gradient[0], fd, 1e-9);
  const double fd2 = (H.gradient(vec({1 + h}))[0] - H.gradient(vec({1 - h}))[0]) / (2 * h);
  EXPECT_NEAR(e.hessian(0, 0), fd2, 1e-9);
}

TEST(Hamiltonian, ConvexityConstants) {
  EXPECT_EQ(Hamiltonian::quadratic().theta(), 1.0);
  EXPECT_EQ(Hamiltonian::quadratic().Theta(), 1.0);
  const Hamiltonian a = Hamiltonian::anisotropic_quadratic({1.0, 2.0});
  EXPECT_EQ(a.theta(), 1.0);
  EXPECT_EQ(a.Theta(), 2.0);
  const Hamiltonian l = Hamiltonian::log_cosh_regularized(0.1, 3.0);
  EXPECT_NEAR(l.theta(), 1.1, 1e-15);
  EXPECT_NEAR(l.Theta(), std::cosh(3.0) + 0.1, 1e-12);
  EXPECT_FALSE(Hamiltonian::zero().uniformly_convex());
}

TEST(Hamiltonian, HessianEigenvaluesWithinBounds) {
  std::mt19937_64 rng(21);
  const Hamiltonian H = Hamiltonian::log_cosh_regularized(0.2, 2.0);
  std::uniform_real_distribution<double> u(-1.4, 1.4);
  for (int i = 0; i < 500; ++i) {
    const Vec p = vec({u(rng), u(rng)});
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(Eigen::Matrix2d(H.hessian(p)));
    EXPECT_GE(es.eigenvalues().minCoeff(), H.theta() - 1e-12);
    EXPECT_LE(es.eigenvalues().maxCoeff(), H.Theta() + 1e-12);
  }
}

TEST(Hamiltonian, ParseRoundTrip) {
  for (const char* text : {"zero", "quadratic", "anisotropic_quadratic:1,2", "log_cosh_regularized:0.25,3"}) {
    EXPECT_EQ(Hamiltonian::parse(Hamiltonian::parse(text).describe()).describe(),
              Hamiltonian::parse(text).describe());
  }
  EXPECT_EQ(Hamiltonian::parse("anisotropic_quadratic:1,2").describe(), "anisotropic_quadratic:1,2");
  EXPECT_THROW(Hamiltonian::parse("cubic"), std::invalid_argument);
  EXPECT_THROW(Hamiltonian::parse("quadratic:3"), std::invalid_argument);
}

TEST(Hamiltonian, RejectsNonFiniteMomentum) {
  EXPECT_THROW(Hamiltonian::quadratic().eval(vec({NAN})), std::invalid_argument);
}

TEST(Legendre, AtGradientOfKnownMomentum) {
  const Hamiltonian H = Hamiltonian::log_cosh_regularized(0.1);
  const Lagrangian L(H);
  const Vec p = vec({0.7});
  const Vec q = H.gradient(p);
  const auto r = L.solve(q);
  EXPECT_NEAR(r.value, p.dot(q) - H.value(p), 1e-12);
  EXPECT_NEAR(r.maximizer[0], 0.7, 1e-9);
}

TEST(Legendre, AnisotropicClosedForm) {
  const Lagrangian L(Hamiltonian::anisotropic_quadratic({1.0, 2.0}));
  EXPECT_NEAR(L(vec({1.0, 1.0})), 0.75, 1e-12);
}

TEST(Legendre, QuadraticIsSelfDual) {
  const Lagrangian L(Hamiltonian::quadratic());
  std::mt19937_64 rng(22);
  std::uniform_real_distribution<double> u(-5, 5);
  for (int i = 0; i < 100; ++i) {
    const Vec q = vec({u(rng), u(rng)});
    EXPECT_NEAR(L(q), 0.5 * q.squaredNorm(), 1e-10 * (1 + q.squaredNorm()));
  }
}

TEST(Legendre, FenchelYoungInequality) {
  // H(p) + L(q) >= p.q with equality at q = DH(p).
  const Hamiltonian H = Hamiltonian::log_cosh_regularized(0.3);
  const Lagrangian L(H);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int i = 0; i < 200; ++i) {
    const Vec p = vec({u(rng), u(rng)});
    const Vec q = vec({u(rng), u(rng)});
    EXPECT_GE(H.value(p) + L(q), p.dot(q) - 1e-10);
  }
}

TEST(Legendre, ConjugateOfConjugateReturnsH) {
  // sup_q (p.q - L(q)) by a dense scan recovers H(p) in 1D.
  const Hamiltonian H = Hamiltonian::log_cosh_regularized(0.1);
  const Lagrangian L(H);
  for (double p : {-0.8, 0.0, 0.5}) {
    double best = -1e300;
    for (int i = -4000; i <= 4000; ++i) {
      const double q = i * 1e-3;
      best = std::max(best, p * q - L(vec({q})));
    }
    EXPECT_NEAR(best, H.value(vec({p})), 1e-6);
  }
}
