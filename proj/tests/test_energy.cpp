#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "logepi/energy.hpp"

using namespace logepi;
namespace {

constexpr double kPi = std::numbers::pi;

Trace random_trace(const BasisPtr& b, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  Trace t(b);
  for (std::size_t j = 0; j < t.size(); ++j) t[j] = n(rng) / (1.0 + b->mode(j).degree);
  return t;
}

std::size_t circle_mode(int k, bool cosine) { return k == 0 ? 0 : (cosine ? 2 * k - 1 : 2 * k); }

double rel(double a, double b) { return std::abs(a - b) / (1.0 + std::abs(b)); }

TEST(F, ZeroAndCriticalSet) {
  auto b = build_basis(2, 5);
  EXPECT_EQ(F_of(Trace(b)), 0.0);
  EXPECT_NEAR(F_of(eval_on_sphere(isotropic_blowup(2), b)), kPi / 8, 1e-13);
}

TEST(F, QuadraticPlusCubicMode) {
  auto b = build_basis(2, 5);
  Trace c = eval_on_sphere(isotropic_blowup(2), b);
  c[circle_mode(3, true)] += 1.0;
  EXPECT_NEAR(F_of(c), kPi / 8 + 5.0, 1e-12);
  // quadrature oracle: int |d_t c|^2 - 4 c^2 + c on an oversampled circle
  double s = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const double t = 2 * kPi * i / n;
    const double v = 0.125 + std::cos(3 * t) / std::sqrt(kPi), dv = -3 * std::sin(3 * t) / std::sqrt(kPi);
    s += (dv * dv - 4 * v * v + v) * 2 * kPi / n;
  }
  EXPECT_NEAR(F_of(c), s, 1e-11);
}

TEST(GradF, ZeroTraceAndCriticalSet) {
  auto b = build_basis(3, 4);
  for (double v : synthesize(gradF_of(Trace(b)))) EXPECT_NEAR(v, 1.0, 1e-13);
  for (double v : synthesize(gradF_of(eval_on_sphere(isotropic_blowup(3), b)))) EXPECT_LE(std::abs(v), 1e-10);
}

TEST(GradF, DirectionalDerivative) {
  std::mt19937_64 rng(1);
  for (int d : {2, 3}) {
    auto b = build_basis(d, 6);
    for (int trial = 0; trial < 20; ++trial) {
      Trace phi = random_trace(b, rng, 1.0), v = random_trace(b, rng, 1.0);
      const double h = 1e-5;
      const double fd = (F_of(phi + h * v) - F_of(phi)) / h;
      const double exact = dot(v, gradF_of(phi));
      EXPECT_LE(std::abs(fd - exact), 1e-3 * std::max(1.0, std::abs(exact)));
    }
  }
}

TEST(W0Homog, Examples) {
  auto b = build_basis(2, 5);
  Trace c(b);
  c[circle_mode(3, true)] = 1.0;
  EXPECT_NEAR(W0_homog(c, 0.0), 1.25, 1e-15);
  EXPECT_NEAR(W0_homog(c, 1.0), 1.0, 1e-15);
  Trace q(b);
  q[circle_mode(2, false)] = 0.7;
  EXPECT_EQ(W0_homog(q, 0.0), 0.0);
  EXPECT_THROW(W0_homog(c, -0.1), PreconditionError);
}

TEST(W0Homog, VolumetricOracle) {
  // r^2 cos(3t)/sqrt(pi) and r^3 cos(3t)/sqrt(pi)
  auto b = build_basis(2, 5);
  Trace c(b);
  c[circle_mode(3, true)] = 1.0;
  for (double eps : {0.0, 1.0}) {
    std::vector<double> e(c.size(), eps);
    const EnergyReport rep = W_volumetric(sample_polar(power_extension(c, e)));
    EXPECT_NEAR(rep.w0, W0_homog(c, eps), 1e-6);
  }
}

TEST(W0Homog, EpsilonDependence) {
  // minimized at 0 for lambda <= 2d, decreasing at 0 for lambda > 2d
  for (int d : {2, 3}) {
    auto b = build_basis(d, 4);
    for (std::size_t j = 0; j < b->size(); ++j) {
      Trace c(b);
      c[j] = 1.0;
      const double w0 = W0_homog(c, 0.0), dw = (W0_homog(c, 1e-6) - w0) / 1e-6;
      if (b->mode(j).lambda <= 2 * d) {
        for (double e : {0.1, 0.5, 1.0, 2.0}) EXPECT_GE(W0_homog(c, e), w0 - 1e-15);
      } else {
        EXPECT_LT(dw, 0.0);
      }
    }
  }
}

TEST(Volumetric, QuadraticBlowupEnergy) {
  auto b = build_basis(2, 4);
  const EnergyReport rep = W_volumetric(sample_polar(homogeneous_extension(eval_on_sphere(isotropic_blowup(2), b))));
  EXPECT_LE(std::abs(rep.w - kPi / 32) / (kPi / 32), 1e-6);
}

TEST(Volumetric, ZeroField) {
  auto b = build_basis(3, 3);
  const EnergyReport rep = W_volumetric(sample_polar(homogeneous_extension(Trace(b))));
  EXPECT_EQ(rep.w0, 0.0);
  EXPECT_EQ(rep.w, 0.0);
}

TEST(Volumetric, CoarseGridRejected) {
  auto b = build_basis(2, 3);
  EXPECT_THROW(W_volumetric(sample_polar(homogeneous_extension(Trace(b)), 8)), PreconditionError);
}

TEST(Volumetric, HomogeneousExtensionMatchesSpectral) {
  std::mt19937_64 rng(2);
  for (auto [d, L] : {std::pair{2, 16}, std::pair{3, 8}}) {
    auto b = build_basis(d, L);
    Trace c = random_trace(b, rng, 0.3);
    const EnergyReport rep = W_volumetric(sample_polar(homogeneous_extension(c)));
    EXPECT_LE(std::abs(rep.w0 - W0_homog(c, 0.0)), 1e-6 * std::max(1.0, std::abs(W0_homog(c, 0.0))));
    EXPECT_NEAR(per_mode_total(rep), rep.w0, 1e-10);
  }
}

TEST(Slicing, ConstantProfilesGiveFOverDPlusTwo) {
  std::mt19937_64 rng(3);
  for (int d : {2, 3}) {
    auto b = build_basis(d, 6);
    Trace c = random_trace(b, rng, 0.5);
    EXPECT_NEAR(slicing_W(homogeneous_extension(c)), F_of(c) / (d + 2.0), 1e-12);
  }
}

TEST(Slicing, PowerProfilesMatchClosedForm) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (int d : {2, 3}) {
    auto b = build_basis(d, 6);
    Trace c = random_trace(b, rng, 0.5);
    std::vector<double> e(c.size());
    for (double& x : e) x = u(rng);
    auto f = power_extension(c, e);
    const double closed = W0_homog(c, e) + volume_terms(b, f.terms);
    EXPECT_NEAR(slicing_W(f), closed, 1e-11 * std::max(1.0, std::abs(closed)));
    EXPECT_NEAR(W0_terms(b, f.terms), W0_homog(c, e), 1e-13);
  }
}

TEST(Slicing, AgreesWithVolumetricOnRandomFields) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  for (auto [d, L] : {std::pair{2, 16}, std::pair{3, 8}}) {
    auto b = build_basis(d, L);
    for (int trial = 0; trial < 10; ++trial) {
      Trace c = random_trace(b, rng, 0.5);
      std::vector<double> e(c.size());
      for (double& x : e) x = u(rng);
      auto f = power_extension(c, e);
      const EnergyReport rep = W_volumetric(sample_polar(f));
      EXPECT_LE(rel(slicing_W(f), rep.w), 1e-5) << "d=" << d;
    }
  }
}

TEST(Slicing, SampledProfileAgreesWithVolumetric) {
  std::mt19937_64 rng(6);
  auto b = build_basis(2, 6);
  Trace c = random_trace(b, rng, 0.5);
  std::vector<double> radii;
  std::vector<std::vector<double>> vals;
  for (int i = 0; i <= 40; ++i) {
    const double r = i / 40.0;
    radii.push_back(r);
    std::vector<double> v(c.size());
    for (std::size_t j = 0; j < c.size(); ++j) v[j] = c[j] * (1.0 + 0.3 * std::sin(3 * r + j)) / (1.0 + 0.3 * std::sin(3.0 + j));
    vals.push_back(v);
  }
  auto f = sampled_profile(b, radii, vals);
  EXPECT_LE(anchoring_error(f, c), 1e-14);
  EXPECT_LE(rel(slicing_W(f), W_volumetric(sample_polar(f)).w), 1e-5);
}

TEST(Additivity, DisjointModeSupports) {
  std::mt19937_64 rng(7);
  auto b = build_basis(3, 5);
  Trace c = random_trace(b, rng, 0.4);
  Trace lo = filter_degrees(c, [](int k) { return k <= 2; }), hi = filter_degrees(c, [](int k) { return k > 2; });
  std::vector<double> e(c.size(), 0.4);
  auto W0 = [&](const Trace& t) { return W0_terms(b, power_extension(t, e).terms); };
  EXPECT_NEAR(W0(c), W0(lo) + W0(hi), 1e-10);
}

TEST(Decompose, ClassSigns) {
  std::mt19937_64 rng(8);
  auto b = build_basis(2, 6);
  Trace p = random_trace(b, rng, 0.1);
  Trace plus = filter_degrees(p, [](int k) { return k > 2; });
  Trace minus = filter_degrees(p, [](int k) { return k < 2; });
  const ClassEnergies ep = class_energies(plus), em = class_energies(minus);
  EXPECT_EQ(ep.minus, 0.0);
  EXPECT_EQ(ep.zero, 0.0);
  EXPECT_GE(ep.plus, (dirichlet_energy(plus) + norm2(plus)) / (3.0 * 4.0));
  EXPECT_LE(em.minus, 0.0);
}

TEST(Decompose, WeissDifferenceIsW0OfPerturbation) {
  std::mt19937_64 rng(9);
  for (int d : {2, 3}) {
    auto b = build_basis(d, 6);
    Trace q = eval_on_sphere(isotropic_blowup(d), b);
    Trace p = random_trace(b, rng, 0.01);
    Trace z = q + p;
    const double spectral = class_energies(p).total();
    EXPECT_NEAR(W_of_homogeneous(z) - W_of_homogeneous(q), spectral, 1e-13);
    const double vol = W_volumetric(sample_polar(homogeneous_extension(p))).w0;
    EXPECT_LE(std::abs(vol - spectral), 1e-6 * std::max(1e-3, std::abs(spectral)));
  }
}

TEST(Reparam, ConstantFlow) {
  std::mt19937_64 rng(10);
  auto b = build_basis(2, 5);
  Trace c = eval_on_sphere(isotropic_blowup(2), b) + random_trace(b, rng, 0.01);
  FlowTrajectory traj = stationary_flow(c, {0.0, 0.5, 1.0});
  EXPECT_NEAR(reparam_W(traj, 0.3, 1.0), F_of(c) / 4.0, 1e-12);
}

TEST(Reparam, StoppedFlowMatchesSlicing) {
  std::mt19937_64 rng(11);
  auto b = build_basis(2, 5);
  Trace c0 = random_trace(b, rng, 0.3), c1 = random_trace(b, rng, 0.3);
  FlowTrajectory traj;
  traj.basis = b;
  traj.times = {0.0, 1.0};
  traj.exact_state = [=](double t) { return c0 + std::exp(-2 * t) * c1; };
  traj.exact_derivative = [=](double t) { return -2 * std::exp(-2 * t) * c1; };
  for (double t : traj.times) {
    traj.states.push_back(traj.exact_state(t));
    traj.derivatives.push_back(traj.exact_derivative(t));
  }
  finalize_samples(traj);
  const double kappa = 0.4, T = 0.7;
  const ReparamResult r = reparam_W_forms(traj, kappa, T, 4.0);
  EXPECT_LE(std::abs(r.form_integral - r.form_dissipation), 1e-6 * std::abs(r.form_dissipation));
  auto field = reparametrized_field(traj, kappa, T);
  EXPECT_LE(anchoring_error(field, c0 + c1), 1e-14);
  EXPECT_LE(rel(slicing_W(field), r.form_dissipation), 1e-5);
}

}  // namespace
