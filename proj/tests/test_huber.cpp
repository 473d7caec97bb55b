#include "robust_huber/huber.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace rh;

TEST(HuberPenalty, Examples) {
  HuberParams p(2.0);
  EXPECT_DOUBLE_EQ(huber_penalty(0.0, p), 0.0);
  EXPECT_DOUBLE_EQ(huber_penalty(1.0, p), 0.5);
  EXPECT_DOUBLE_EQ(huber_penalty(3.0, p), 4.0);
  EXPECT_DOUBLE_EQ(huber_penalty(-3.0, p), 4.0);
}

TEST(HuberPenalty, KinkIsContinuous) {
  HuberParams p(2.0);
  EXPECT_DOUBLE_EQ(huber_penalty(2.0, p), 2.0);
  EXPECT_NEAR(huber_penalty(std::nextafter(2.0, 3.0), p), 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(huber_penalty_deriv(2.0, p), 2.0);
  EXPECT_DOUBLE_EQ(huber_penalty_deriv(-2.0, p), -2.0);
}

TEST(HuberPenalty, RejectsNonFinite) {
  HuberParams p(2.0);
  EXPECT_THROW(huber_penalty(std::numeric_limits<double>::quiet_NaN(), p), DomainError);
  EXPECT_THROW(huber_penalty_deriv(std::numeric_limits<double>::infinity(), p), DomainError);
  EXPECT_THROW(HuberParams(0.0), PreconditionError);
  EXPECT_THROW(HuberParams(-1.0), PreconditionError);
}

TEST(HuberDeriv, Examples) {
  HuberParams p(2.0);
  EXPECT_DOUBLE_EQ(huber_penalty_deriv(1.0, p), 1.0);
  EXPECT_DOUBLE_EQ(huber_penalty_deriv(5.0, p), 2.0);
  EXPECT_DOUBLE_EQ(huber_penalty_deriv(-5.0, p), -2.0);
}

TEST(HuberLoss, Examples) {
  HuberParams p(2.0);
  EXPECT_DOUBLE_EQ(huber_loss(Vector::Zero(3), p), 0.0);
  EXPECT_DOUBLE_EQ(huber_loss(Vector{{1.0, 3.0}}, p), 4.5);
  EXPECT_DOUBLE_EQ(huber_loss(Vector{{-1.0, -3.0}}, p), 4.5);
  EXPECT_DOUBLE_EQ(huber_loss(Vector(0), p), 0.0);
  Matrix m{{1.0, 3.0}, {-1.0, 0.0}};
  EXPECT_DOUBLE_EQ(huber_loss(m, p), 5.0);
}

TEST(HuberLoss, GradExamples) {
  HuberParams p(2.0);
  EXPECT_EQ(huber_loss_grad(Vector::Zero(2), p), Matrix(Matrix::Zero(2, 1)));
  Matrix g = huber_loss_grad(Vector{{1.0, 5.0, -5.0}}, p);
  EXPECT_EQ(g, Matrix(Vector{{1.0, 2.0, -2.0}}));
}

TEST(HuberLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-6.0, 6.0), hd(0.5, 3.0);
  const double step = 1e-6;
  for (int rep = 0; rep < 1000; ++rep) {
    HuberParams p(hd(rng));
    Vector r(8);
    for (Index i = 0; i < r.size(); ++i) {
      do r[i] = u(rng);
      while (std::abs(std::abs(r[i]) - p.h) < 1e-4);  // keep away from the kink
    }
    Matrix g = huber_loss_grad(r, p);
    Vector fd(r.size());
    for (Index i = 0; i < r.size(); ++i) {
      Vector a = r, b = r;
      a[i] += step;
      b[i] -= step;
      fd[i] = (huber_loss(a, p) - huber_loss(b, p)) / (2 * step);
    }
    double rel = (fd - g.col(0)).norm() / std::max(1.0, g.norm());
    ASSERT_LE(rel, 1e-5) << "rep " << rep;
  }
}

TEST(HuberProperties, BoundsAndConvexity) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-10.0, 10.0), l(0.0, 1.0), hd(0.1, 4.0);
  for (int rep = 0; rep < 100000; ++rep) {
    HuberParams p(hd(rng));
    double t = u(rng), s = u(rng), lam = l(rng);
    double f = huber_penalty(t, p);
    ASSERT_GE(f, 0.0);
    ASSERT_LE(f, 0.5 * t * t + 1e-12);
    if (std::abs(t) <= p.h) ASSERT_DOUBLE_EQ(f, 0.5 * t * t);
    else ASSERT_LT(f, 0.5 * t * t);
    ASSERT_LE(std::abs(huber_penalty_deriv(t, p)), p.h);
    double mid = huber_penalty(lam * t + (1 - lam) * s, p);
    ASSERT_LE(mid, lam * f + (1 - lam) * huber_penalty(s, p) + 1e-12);
  }
}

TEST(HuberBregman, MatchesDefinition) {
  HuberParams p(2.0);
  EXPECT_NEAR(huber_bregman(0.5, 0.4, p), 0.5 * 0.4 * 0.4, 1e-15);
  EXPECT_NEAR(huber_bregman(3.0, -4.0, p), huber_penalty(-1.0, p) - huber_penalty(3.0, p) + 2.0 * 4.0, 1e-12);
}

TEST(HuberCurvature, Examples) {
  HuberParams p(2.0);
  EXPECT_TRUE(curvature_lower_bound_holds(0.0, 0.0, 1.0, p));
  EXPECT_TRUE(curvature_lower_bound_holds(0.5, 0.4, 1.0, p));
  EXPECT_THROW(curvature_lower_bound_holds(0.0, 0.0, 2.5, p), PreconditionError);
  EXPECT_THROW(curvature_lower_bound_holds(0.0, 0.0, -0.1, p), PreconditionError);
}

TEST(HuberCurvature, HoldsOnMillionRandomTuples) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> unit(0.0, 1.0), hd(0.1, 4.0);
  for (int rep = 0; rep < 1000000; ++rep) {
    HuberParams p(hd(rng));
    double eta = (2 * unit(rng) - 1) * 3 * p.h;
    double delta = (2 * unit(rng) - 1) * 3 * p.h;
    double tau = unit(rng) * p.h;
    ASSERT_TRUE(curvature_lower_bound_holds(eta, delta, tau, p)) << eta << " " << delta << " " << tau;
  }
}

TEST(CompensatedSum, RecoversCancellation) {
  CompensatedSum s;
  s.add(1e16);
  s.add(1.0);
  s.add(-1e16);
  EXPECT_DOUBLE_EQ(s.value(), 1.0);
}
