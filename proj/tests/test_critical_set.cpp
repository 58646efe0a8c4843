#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "logepi/critical_set.hpp"
#include "logepi/functional.hpp"

using namespace logepi;
namespace {

constexpr double kPi = std::numbers::pi;

Trace from_function(const BasisPtr& b, const std::function<double(const Point&)>& f) {
  std::vector<double> s;
  for (const Point& x : b->nodes()) s.push_back(f(x));
  return analyze(s, b);
}

QuadraticBlowup random_blowup(int d, std::mt19937_64& rng) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::VectorXd ev(d);
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += ev(i) = g(rng);
  ev *= 0.25 / s;
  Eigen::MatrixXd G(d, d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) G(i, k) = n(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  Eigen::MatrixXd R = qr.householderQ();
  return {R * ev.asDiagonal() * R.transpose()};
}

// L2 distance between a trace and Q_A by quadrature on an oversampled basis
double quad_distance(const Trace& c, const QuadraticBlowup& q) {
  auto fine = build_basis(c.basis->dim(), c.basis->max_degree(), 2);
  double s = 0.0;
  for (std::size_t k = 0; k < fine->node_count(); ++k) {
    const Point& x = fine->nodes()[k];
    const double v = evaluate(c, x) - q(x);
    s += fine->weights()[k] * v * v;
  }
  return std::sqrt(s);
}

TEST(EvalOnSphere, IsotropicIsConstant) {
  auto b = build_basis(2, 4);
  Trace t = eval_on_sphere(isotropic_blowup(2), b);
  for (double v : synthesize(t)) EXPECT_NEAR(v, 0.125, 1e-14);
}

TEST(EvalOnSphere, DiagonalMatchesTrigExpansion) {
  auto b = build_basis(2, 4);
  QuadraticBlowup q{Eigen::Matrix2d{{0.25, 0.0}, {0.0, 0.0}}};
  Trace t = eval_on_sphere(q, b);
  for (std::size_t k = 0; k < b->node_count(); ++k) {
    const double a = std::atan2(b->nodes()[k][1], b->nodes()[k][0]);
    EXPECT_NEAR(synthesize(t)[k], 0.125 + 0.125 * std::cos(2 * a), 1e-14);
  }
  for (std::size_t j = 0; j < t.size(); ++j)
    if (b->mode(j).degree != 0 && b->mode(j).degree != 2) EXPECT_EQ(t[j], 0.0);
}

TEST(EvalOnSphere, IntegralIsMoment) {
  std::mt19937_64 rng(1);
  for (int d : {2, 3}) {
    auto b = build_basis(d, 4);
    QuadraticBlowup q = random_blowup(d, rng);
    std::vector<double> v = synthesize(eval_on_sphere(q, b));
    EXPECT_NEAR(integrate(v, *b), 0.25 * b->surface_area() / d, 1e-13);
    for (double x : v) EXPECT_GE(x, -1e-15);
    // agrees with direct quadrature analysis of x.Ax
    Trace direct = from_function(b, [&](const Point& x) { return q(x); });
    Trace t = eval_on_sphere(q, b);
    for (std::size_t j = 0; j < t.size(); ++j) EXPECT_NEAR(t[j], direct[j], 1e-14);
  }
}

TEST(SimplexProject, Examples) {
  auto a = simplex_project({0.135, 0.115});
  EXPECT_NEAR(a[0], 0.135, 1e-15);
  EXPECT_NEAR(a[1], 0.115, 1e-15);
  auto b = simplex_project({-0.875, 1.125});
  EXPECT_DOUBLE_EQ(b[0], 0.0);
  EXPECT_DOUBLE_EQ(b[1], 0.25);
  auto c = simplex_project({0.25, 0.0});
  EXPECT_DOUBLE_EQ(c[0], 0.25);
  EXPECT_DOUBLE_EQ(c[1], 0.0);
}

TEST(SimplexProject, KktCertificate) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 0.5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v(3);
    for (double& x : v) x = n(rng);
    auto p = simplex_project(v);
    double sum = 0.0;
    for (double x : p) {
      sum += x;
      EXPECT_GE(x, 0.0);
    }
    EXPECT_NEAR(sum, 0.25, 1e-14);
    // a common shift tau: p_i = max(v_i - tau, 0)
    double tau = 0.0;
    for (std::size_t i = 0; i < 3; ++i)
      if (p[i] > 0) tau = v[i] - p[i];
    for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(p[i], std::max(v[i] - tau, 0.0), 1e-14);
  }
}

TEST(ProjectToS, FixedPoint) {
  std::mt19937_64 rng(3);
  for (int d : {2, 3}) {
    auto b = build_basis(d, 4);
    QuadraticBlowup q = random_blowup(d, rng);
    Projection p = project_to_S(eval_on_sphere(q, b));
    EXPECT_LE((p.blowup.A - q.A).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE(p.distance, 1e-12);
  }
}

TEST(ProjectToS, OddPerturbationExample) {
  auto b = build_basis(2, 4);
  Trace c = from_function(b, [](const Point& x) {
    const double a = std::atan2(x[1], x[0]);
    return 0.125 + 0.01 * std::cos(2 * a) + 0.005 * std::cos(3 * a);
  });
  Projection p = project_to_S(c);
  EXPECT_NEAR(p.blowup.A(0, 0), 0.135, 1e-13);
  EXPECT_NEAR(p.blowup.A(1, 1), 0.115, 1e-13);
  EXPECT_NEAR(p.blowup.A(0, 1), 0.0, 1e-13);
  EXPECT_NEAR(p.distance * p.distance, 0.005 * 0.005 * kPi, 1e-15);
  // grid-search oracle over 2x2 PSD trace-1/4 matrices
  double best = 1e9;
  for (int i = 0; i <= 250; ++i)
    for (int k = -60; k <= 60; ++k) {
      const double a11 = 0.25 * i / 250, off = 0.002 * k / 60.0 * 10;
      Eigen::Matrix2d A{{a11, off}, {off, 0.25 - a11}};
      if (A.determinant() < 0) continue;
      best = std::min(best, quad_distance(c, {A}));
    }
  EXPECT_LE(p.distance, best + 1e-12);
}

TEST(ProjectToS, ClampedExample) {
  auto b = build_basis(2, 4);
  Trace c = from_function(b, [](const Point& x) { return 0.125 - std::cos(2 * std::atan2(x[1], x[0])); });
  Projection p = project_to_S(c);
  EXPECT_NEAR(p.blowup.A(0, 0), 0.0, 1e-14);
  EXPECT_NEAR(p.blowup.A(1, 1), 0.25, 1e-14);
  p.blowup.validate();
}

TEST(ProjectToS, Idempotent) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0.0, 0.1);
  for (int d : {2, 3}) {
    auto b = build_basis(d, 4);
    for (int trial = 0; trial < 20; ++trial) {
      Trace c(b);
      for (double& x : c.coeffs) x = n(rng);
      Projection p = project_to_S(c);
      p.blowup.validate(1e-12);
      Projection again = project_to_S(eval_on_sphere(p.blowup, b));
      EXPECT_LE((again.blowup.A - p.blowup.A).cwiseAbs().maxCoeff(), 1e-10);
    }
  }
}

TEST(ProjectToS, NoRandomElementIsCloser) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 0.05);
  for (int d : {2, 3}) {
    auto b = build_basis(d, 4);
    for (int trial = 0; trial < 100; ++trial) {
      Trace c(b);
      for (double& x : c.coeffs) x = n(rng);
      c += eval_on_sphere(random_blowup(d, rng), b);
      Projection p = project_to_S(c);
      EXPECT_NEAR(p.distance, quad_distance(c, p.blowup), 1e-12);
      for (int s = 0; s < 1000; ++s) {
        QuadraticBlowup q = random_blowup(d, rng);
        ASSERT_GE(norm(c - eval_on_sphere(q, b)), p.distance - 1e-8);
      }
    }
  }
}

TEST(ProjectToS, IsometryConstant) {
  EXPECT_NEAR(isometry_constant(*build_basis(2, 4)), kPi / 2, 1e-13);
  EXPECT_NEAR(isometry_constant(*build_basis(3, 4)), 8 * kPi / 15, 1e-13);
}

TEST(ReferenceEnergies, AnalyticValues) {
  auto r2 = reference_energies(2);
  EXPECT_NEAR(r2.F_S, kPi / 8, 1e-12);
  EXPECT_NEAR(r2.W_S, kPi / 32, 1e-12);
  auto r3 = reference_energies(3);
  EXPECT_NEAR(r3.F_S, kPi / 6, 1e-12);
  EXPECT_NEAR(r3.W_S, kPi / 30, 1e-12);
  // F(Q) = (1/2) int Q because gradF(Q) = 0
  for (int d : {2, 3}) {
    auto b = build_basis(d, 4);
    Trace q = eval_on_sphere(isotropic_blowup(d), b);
    EXPECT_NEAR(F_of(q), 0.5 * integrate(synthesize(q), *b), 1e-13);
  }
}

TEST(ReferenceEnergies, ConstantOnS) {
  std::mt19937_64 rng(6);
  for (int d : {2, 3}) {
    auto b = build_basis(d, 4);
    double lo = 1e9, hi = -1e9;
    for (int i = 0; i < 10; ++i) {
      const double f = F_of(eval_on_sphere(random_blowup(d, rng), b));
      lo = std::min(lo, f), hi = std::max(hi, f);
    }
    EXPECT_LE(hi - lo, 1e-10);
  }
}

TEST(ReferenceEnergies, GradientVanishesOnS) {
  std::mt19937_64 rng(7);
  for (int d : {2, 3}) {
    auto b = build_basis(d, 5);
    for (int i = 0; i < 10; ++i) {
      auto g = synthesize(gradF_of(eval_on_sphere(random_blowup(d, rng), b)));
      for (double v : g) EXPECT_LE(std::abs(v), 1e-10);
    }
  }
}

TEST(QuadraticBlowup, ValidationRejectsBadMatrices) {
  EXPECT_THROW((QuadraticBlowup{Eigen::Matrix2d{{0.3, 0}, {0, 0.1}}}.validate()), PreconditionError);
  EXPECT_THROW((QuadraticBlowup{Eigen::Matrix2d{{0.3, 0}, {0, -0.05}}}.validate()), PreconditionError);
  EXPECT_NO_THROW(isotropic_blowup(3).validate());
}

}  // namespace
