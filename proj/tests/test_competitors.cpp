#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "logepi/competitors.hpp"
#include "logepi/corpus.hpp"

using namespace logepi;
namespace {

constexpr double kPi = std::numbers::pi;

std::size_t circle_mode(int k, bool cosine) { return k == 0 ? 0 : (cosine ? 2 * k - 1 : 2 * k); }

Trace isotropic(const BasisPtr& b) { return eval_on_sphere(isotropic_blowup(b->dim()), b); }

QuadraticBlowup degenerate_circle() {
  QuadraticBlowup q{Eigen::MatrixXd::Zero(2, 2)};
  q.A(0, 0) = 0.25;
  return q;
}

const Corpus& small_corpus(int d) {
  static const Corpus c2 = [] {
    CorpusSpec s;
    s.count = 40;
    return generate_corpus(s);
  }();
  static const Corpus c3 = [] {
    CorpusSpec s;
    s.dim = 3;
    s.max_degree = 5;
    s.count = 8;
    return generate_corpus(s);
  }();
  return d == 2 ? c2 : c3;
}

TEST(Split, TraceOnCriticalSetHasNoPerturbation) {
  auto b = build_basis(2, 6);
  QuadraticBlowup q{Eigen::MatrixXd::Zero(2, 2)};
  q.A << 0.2, 0.03, 0.03, 0.05;
  const ModeSplit s = split_trace(eval_on_sphere(q, b));
  EXPECT_LE(norm(s.minus), 1e-12);
  EXPECT_LE(norm(s.zero), 1e-12);
  EXPECT_LE(norm(s.plus), 1e-12);
  EXPECT_LE((s.Q.A - q.A).norm(), 1e-12);
}

TEST(Split, CubicPerturbationGoesToPlusClass) {
  auto b = build_basis(2, 6);
  Trace c = isotropic(b);
  c[circle_mode(3, true)] += 0.005 * std::sqrt(kPi);  // 0.005 cos 3t
  const ModeSplit s = split_trace(c);
  EXPECT_NEAR(s.plus[circle_mode(3, true)], 0.005 * std::sqrt(kPi), 1e-14);
  EXPECT_NEAR(norm(s.plus), 0.005 * std::sqrt(kPi), 1e-14);
  EXPECT_LE(norm(s.minus), 1e-14);
  EXPECT_LE(norm(s.zero), 1e-14);
}

TEST(Split, DegreeOnePerturbationGoesToMinusClass) {
  auto b = build_basis(2, 6);
  Trace c = isotropic(b);
  c[circle_mode(1, true)] += 0.02 * std::sqrt(kPi);
  const ModeSplit s = split_trace(c);
  EXPECT_NEAR(s.minus[circle_mode(1, true)], 0.02 * std::sqrt(kPi), 1e-14);
  EXPECT_NEAR(norm(s.minus), 0.02 * std::sqrt(kPi), 1e-14);
  EXPECT_LE(norm(s.plus), 1e-14);
  EXPECT_LE(norm(s.zero), 1e-14);
  EXPECT_LE((s.Q.A - isotropic_blowup(2).A).norm(), 1e-14);
}

TEST(Split, DisjointSupportAndReassembly) {
  for (int d : {2, 3}) {
    for (const CorpusEntry& e : small_corpus(d).entries) {
      const ModeSplit s = split_trace(e.trace);
      const BasisPtr& b = e.trace.basis;
      for (std::size_t j = 0; j < b->size(); ++j) {
        const int k = b->mode(j).degree;
        if (k >= 2) EXPECT_EQ(s.minus[j], 0.0);
        if (k != 2) EXPECT_EQ(s.zero[j], 0.0);
        if (k <= 2) EXPECT_EQ(s.plus[j], 0.0);
      }
      EXPECT_LE(norm(s.source() - e.trace), 1e-12);
    }
  }
}

TEST(KeyDecomposition, NoCorrectionWhenLowPartNonnegative) {
  auto b = build_basis(2, 6);
  Trace c = isotropic(b);
  c[circle_mode(4, false)] += 0.01;
  c[circle_mode(1, true)] += 0.01;
  const ModeSplit s = split_trace(c);
  const KeyDecomposition k = build_h2_ha(s);
  EXPECT_EQ(k.M, 0.0);
  EXPECT_LE(norm(k.h2 - (s.q + s.minus + s.zero)), 1e-15);
  EXPECT_LE(norm(k.ha - s.plus), 1e-15);
}

TEST(KeyDecomposition, DegenerateBlowupWithNegativeDip) {
  auto b = build_basis(2, 8);
  Trace c = eval_on_sphere(degenerate_circle(), b);
  c[circle_mode(1, true)] -= 0.05 * std::sqrt(kPi);  // -0.05 cos t
  const ModeSplit s = split_trace(c);
  EXPECT_LE((s.Q.A - degenerate_circle().A).norm(), 1e-12);
  const KeyDecomposition k = build_h2_ha(s);
  // cos^2/4 - 0.05 cos has its minimum -0.0025 at cos t = 0.1
  EXPECT_NEAR(k.M, 0.0025, 1e-12);
  Trace corr = constant_trace(b, 1.0 / 8.0) - s.q;
  corr *= 16.0 * k.M;
  EXPECT_LE(norm(k.h2 - (s.q + s.minus + corr)), 1e-15);
  EXPECT_LE(norm(k.h2 + k.ha - c), 1e-15);
  EXPECT_GE(refined_min(k.h2), -1e-12);
}

TEST(KeyDecomposition, ExactReassemblyAndNonnegativeH2OnCorpus) {
  for (int d : {2, 3}) {
    for (const CorpusEntry& e : small_corpus(d).entries) {
      const KeyDecomposition k = build_h2_ha(split_trace(e.trace));
      for (std::size_t j = 0; j < e.trace.size(); ++j) EXPECT_EQ(k.h2[j] + k.ha[j], e.trace[j]) << e.name;
      EXPECT_GE(nodal_min(k.h2), -1e-10) << e.name;
    }
  }
}

TEST(KeyDecomposition, NegativePartBoundedByPlusEnergy) {
  // a tilted bump on a degenerate blowup: the low part dips below zero (M > 0),
  // and M^{d+1} / |eta_+|^2 stays bounded as the perturbation shrinks
  auto b = build_basis(2, 8);
  const Trace q = eval_on_sphere(degenerate_circle(), b);
  Trace bump = bump_trace(b, Point{1.0, 0.0, 0.0}, 6);
  bump *= 1.0 / norm(bump);
  std::vector<double> x1;
  for (const Point& x : b->nodes()) x1.push_back(x[0]);
  const Trace dir = bump - analyze(x1, b);
  double first = -1.0, worst = 0.0;
  for (double t = 1e-2; t > 1e-6; t *= 0.25) {
    const ModeSplit s = split_trace(q + t * dir);
    const KeyDecomposition k = build_h2_ha(s);
    EXPECT_GT(k.M, 0.0) << t;
    const double ratio = std::pow(k.M, 3) / norm2(s.plus);
    if (first < 0.0) first = ratio;
    worst = std::max(worst, ratio);
  }
  EXPECT_LE(worst, 4.0 * first);
  double corpus_max = 0.0;
  for (const CorpusEntry& e : small_corpus(2).entries) {
    const ModeSplit s = split_trace(e.trace);
    if (norm(s.plus) > 0.0) corpus_max = std::max(corpus_max, std::pow(build_h2_ha(s).M, 3) / norm2(s.plus));
  }
  EXPECT_LT(corpus_max, 1.0);
}

TEST(Identities, HoldOnCorpusForSeveralT) {
  for (int d : {2, 3}) {
    for (const CorpusEntry& e : small_corpus(d).entries) {
      const ModeSplit s = split_trace(e.trace);
      const KeyDecomposition k = build_h2_ha(s);
      for (double t : {-1.0, 0.0, 0.5, 1.0, 2.0}) {
        const IdentityResiduals r = key_identities_check(s, k, t);
        EXPECT_LE(r.r34, 1e-9) << e.name << " t=" << t;
        EXPECT_LE(r.r35, 1e-9) << e.name << " t=" << t;
      }
    }
  }
}

TEST(Identities, PurePlusPerturbation) {
  auto b = build_basis(2, 6);
  Trace c = isotropic(b);
  c[circle_mode(5, true)] += 0.003;
  c[circle_mode(3, false)] -= 0.002;
  const ModeSplit s = split_trace(c);
  const KeyDecomposition k = build_h2_ha(s);
  EXPECT_NEAR(dot(k.ha, gradF_of(c)), 2.0 * spectral_quadratic(s.plus), 1e-14);
  EXPECT_NEAR(F_of(c) - F_of(s.q), spectral_quadratic(s.plus), 1e-14);
}

TEST(Lipschitz, ConeIsEqualityCase1D) {
  const double M = 0.7, L = 2.0, h = 1e-3;
  std::vector<double> f;
  for (int i = 0; i <= 2000; ++i) f.push_back(std::max(0.0, M - L * std::abs(i * h - 1.0)));
  const LipschitzCheck r = lipschitz_bound_check_1d(f, h, L);
  EXPECT_NEAR(r.lhs, 2.0 * M * M * M / (3.0 * L), 1e-12);
  EXPECT_NEAR(r.lhs / r.rhs, 1.0, 1e-10);
}

TEST(Lipschitz, ConstantFunction) {
  const double M = 0.5, L = 1.0, h = 0.01;
  const LipschitzCheck r = lipschitz_bound_check_1d(std::vector<double>(301, M), h, L);
  EXPECT_NEAR(r.lhs, unit_ball_volume(1) * M * M * r.R, 1e-12);
  EXPECT_GE(r.lhs, r.rhs);
  const LipschitzCheck r2 =
      lipschitz_bound_check_2d(std::vector<std::vector<double>>(201, std::vector<double>(201, M)), h, L);
  EXPECT_NEAR(r2.lhs, unit_ball_volume(2) * M * M * r2.R * r2.R, 1e-6);
  EXPECT_GE(r2.lhs, r2.rhs);
}

TEST(Lipschitz, ConeIsNearEqualityCase2D) {
  const double M = 0.5, L = 1.0, h = 0.01;
  const int n = 201;
  std::vector<std::vector<double>> f(n, std::vector<double>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) f[i][j] = std::max(0.0, M - L * std::hypot(i * h - 1.0, j * h - 1.0));
  const LipschitzCheck r = lipschitz_bound_check_2d(f, h, L);
  EXPECT_NEAR(r.lhs / r.rhs, 1.0, 2e-3);
}

TEST(Lipschitz, RandomLipschitzSamples) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + trial % 2;
    const double L = 1.0 + 2.0 * u(rng), M = 0.2 + 0.6 * u(rng);
    // max of cones with slopes <= L, peaked near the centre of [0, 2]^n
    std::vector<std::array<double, 3>> cones;
    for (int k = 0; k < 4; ++k) cones.push_back({0.8 + 0.4 * u(rng), 0.8 + 0.4 * u(rng), M * (0.3 + 0.7 * u(rng))});
    cones[0][2] = M;
    auto fval = [&](double x, double y) {
      double v = 0.0;
      for (const auto& c : cones) v = std::max(v, c[2] - L * std::hypot(x - c[0], n == 2 ? y - c[1] : 0.0));
      return v;
    };
    const double h = 0.01;
    const int m = 201;
    if (n == 1) {
      std::vector<double> f;
      for (int i = 0; i < m; ++i) f.push_back(fval(i * h, 0.0));
      const LipschitzCheck r = lipschitz_bound_check_1d(f, h, L);
      EXPECT_GE(r.lhs, r.rhs) << trial;
    } else {
      std::vector<std::vector<double>> f(m, std::vector<double>(m));
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) f[i][j] = fval(i * h, j * h);
      // bilinear interpolation of L-Lipschitz samples is sqrt(2) L-Lipschitz
      const LipschitzCheck r = lipschitz_bound_check_2d(f, h, std::sqrt(2.0) * L, 32, 360);
      EXPECT_GE(r.lhs, r.rhs) << trial;
    }
  }
}

TEST(Lipschitz, PeakNearBoundaryRejected) {
  std::vector<double> f;
  for (int i = 0; i <= 100; ++i) f.push_back(std::max(0.0, 0.5 - std::abs(i * 0.01 - 0.1)));
  EXPECT_THROW(lipschitz_bound_check_1d(f, 0.01, 1.0), PreconditionError);
}

TEST(Direct, CriticalSetTraceIsQuadratic) {
  auto b = build_basis(2, 6);
  const Trace q = isotropic(b);
  const RadialProfileField h = build_direct(q, 0.3);
  for (const PowerTerm& t : h.terms) EXPECT_EQ(t.exponent, 0.0);
  EXPECT_NEAR(slicing_W(h), W_of_homogeneous(q), 1e-14);
  EXPECT_THROW(build_direct(q, 0.0), PreconditionError);
  EXPECT_THROW(build_direct(q, -0.1), PreconditionError);
}

TEST(Direct, NoCorrectionMatchesUniformExtension) {
  auto b = build_basis(2, 8);
  Trace c = isotropic(b);
  c[circle_mode(3, true)] += 0.004;
  c[circle_mode(6, false)] += 0.002;
  const double eps = 0.2;
  EXPECT_EQ(build_h2_ha(split_trace(c)).M, 0.0);
  EXPECT_NEAR(slicing_W(build_direct(c, eps)), slicing_W(build_uniform_ftilde(c, eps)), 1e-15);
}

TEST(Direct, PositivityDecomposition) {
  for (const CorpusEntry& e : small_corpus(2).entries) {
    const double eps = 0.1;
    const RadialProfileField h = build_direct(e.trace, eps);
    const KeyDecomposition k = build_h2_ha(split_trace(e.trace));
    EXPECT_LE(anchoring_error(h, e.trace), 1e-14);
    for (double r : {0.1, 0.5, 0.9}) {
      const Trace lhs = h.profile_at(r);
      const double a = 1.0 - std::pow(r, eps);
      const Trace rhs = a * k.h2 + std::pow(r, eps) * e.trace;
      EXPECT_LE(norm(lhs - rhs), 1e-14);
    }
    EXPECT_GE(polar_min(h, 32), -1e-10) << e.name;
  }
}

TEST(Harmonic, SingleCubicModeGain) {
  auto b = build_basis(2, 6);
  Trace c = isotropic(b);
  c[circle_mode(3, true)] += 1.0;
  const RadialProfileField f = build_harmonic_f(c);
  const double wz = W_of_homogeneous(c), wf = slicing_W(f);
  EXPECT_NEAR(wz - W_of_homogeneous(isotropic(b)), 5.0 / 4.0, 1e-12);
  EXPECT_NEAR(wf - W_of_homogeneous(isotropic(b)), 1.0, 1e-12);
  EXPECT_GE(wz - wf, 5.0 / 4.0 / 9.0);
  const EnergyReport vol = W_volumetric(sample_polar(f, 256));
  EXPECT_NEAR(vol.w, wf, 1e-5 * std::abs(wf));
}

TEST(Harmonic, NoPlusPartLeavesTraceUnchanged) {
  auto b = build_basis(2, 6);
  Trace c = isotropic(b);
  c[circle_mode(1, false)] += 0.01;
  EXPECT_NEAR(slicing_W(build_harmonic_f(c)), W_of_homogeneous(c), 1e-15);
}

TEST(Harmonic, GainBoundOnCorpus) {
  for (int d : {2, 3}) {
    for (const CorpusEntry& e : small_corpus(d).entries) {
      const ModeSplit s = split_trace(e.trace);
      const double gain = slicing_W(build_harmonic_f(e.trace)) - W_of_homogeneous(e.trace);
      EXPECT_LE(gain, -class_energies(s.plus).plus / (3.0 * (d + 1)) + 1e-15) << e.name;
    }
  }
}

TEST(UniformExtension, SmallEpsilonSeries) {
  auto b = build_basis(2, 8);
  for (int k : {3, 5, 8}) {
    Trace c = isotropic(b);
    c[circle_mode(k, true)] += 0.01;
    const double lambda = k * k, d = 2.0, eps = 1e-4;
    const double exact = slicing_W(build_uniform_ftilde(c, eps)) - W_of_homogeneous(c);
    const double series = -eps * 2.0 * (lambda - 2 * d) / ((d + 2) * (d + 2)) * 1e-4;
    EXPECT_NEAR(exact / series, 1.0, 1e-3) << k;
  }
}

TEST(CertifyDirect, CubicModeExample) {
  auto b = build_basis(2, 8);
  Trace c = isotropic(b);
  c[circle_mode(3, true)] += 0.01;  // 0.01 cos 3t / sqrt(pi)
  const EpiCertificate cert = certify_direct(c);
  EXPECT_NEAR(cert.gap(), 1.25e-4, 1e-15);
  EXPECT_NEAR(cert.gamma, 1.0 / 3.0, 1e-15);
  EXPECT_TRUE(cert.pass);
  EXPECT_GT(cert.epsilon, 0.0);
  EXPECT_LE(cert.W_h - cert.W_S, 1.25e-4 * (1.0 - cert.epsilon * std::cbrt(1.25e-4)) + 1e-10);
  // W(h) through the volumetric oracle
  const RadialProfileField h = build_direct(c, cert.epsilon);
  EXPECT_NEAR(W_volumetric(sample_polar(h, 256)).w, cert.W_h, 1e-5 * std::abs(cert.W_h));
}

TEST(CertifyDirect, CriticalSetTraceHasZeroGap) {
  auto b = build_basis(2, 6);
  const EpiCertificate cert = certify_direct(isotropic(b));
  EXPECT_NEAR(cert.gap(), 0.0, 1e-15);
  EXPECT_TRUE(cert.pass);
}

TEST(CertifyDirect, PureMinusPerturbationIsDegenerate) {
  auto b = build_basis(2, 6);
  Trace c = isotropic(b);
  c[circle_mode(1, true)] += 0.006;
  c[0] -= 0.003;
  const EpiCertificate cert = certify_direct(c);
  EXPECT_LE(cert.gap(), 0.0);
  EXPECT_TRUE(cert.degenerate);
  EXPECT_EQ(cert.W_h, cert.W_z);
  EXPECT_TRUE(cert.pass);
}

TEST(CertifyDirect, PreconditionsAreReported) {
  auto b = build_basis(2, 6);
  Trace neg = eval_on_sphere(degenerate_circle(), b);
  neg[circle_mode(1, true)] -= 0.05;
  EXPECT_THROW(certify_direct(neg), PreconditionError);
  Trace far = isotropic(b);
  far[circle_mode(4, true)] += 0.05;
  EXPECT_THROW(certify_direct(far), PreconditionError);
}

TEST(CertifyDirect, PassesOnCorpus) {
  DirectParams prm;
  prm.polar_shells = 32;
  for (int d : {2, 3}) {
    for (const CorpusEntry& e : small_corpus(d).entries) {
      const EpiCertificate cert = certify_direct(e.trace, prm, e.name);
      EXPECT_TRUE(cert.pass) << e.name;
      EXPECT_GE(cert.positivity_min, -1e-10) << e.name;
    }
  }
}

TEST(Corpus, DeterministicForSeed) {
  CorpusSpec s;
  s.count = 10;
  const Corpus a = generate_corpus(s), b = generate_corpus(s);
  ASSERT_EQ(a.entries.size(), b.entries.size());
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    EXPECT_EQ(a.entries[i].name, b.entries[i].name);
    EXPECT_EQ(a.entries[i].trace.coeffs, b.entries[i].trace.coeffs);
  }
  s.seed = 2;
  const Corpus c = generate_corpus(s);
  EXPECT_NE(a.entries[0].trace.coeffs, c.entries[0].trace.coeffs);
}

TEST(Corpus, EntriesAreAdmissible) {
  const Corpus& c = small_corpus(2);
  EXPECT_EQ(c.entries.size(), 40u);
  const double W_S = reference_energies(2).W_S;
  for (const CorpusEntry& e : c.entries) {
    EXPECT_GE(refined_min(e.trace), -1e-13);
    EXPECT_LE(e.distance, 1e-2);
    EXPECT_LE(W_of_homogeneous(e.trace) - W_S, 1.0);
  }
}

TEST(Corpus, InfeasibleSpecRejected) {
  CorpusSpec s;
  s.count = 3;
  s.delta = 1e-9;
  s.minus = {1e-3, 2e-3};
  s.max_attempts = 5;
  EXPECT_THROW(generate_corpus(s), PreconditionError);
}

}  // namespace
