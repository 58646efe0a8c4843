#pragma once

// Mode split c = Q + eta_- + eta_0 + eta_+, the positive/damped decomposition
// c = h2 + h_alpha, explicit competitors and the direct certificate.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "logepi/critical_set.hpp"
#include "logepi/energy.hpp"
#include "logepi/errors.hpp"
#include "logepi/quadrature.hpp"
#include "logepi/trace.hpp"

namespace logepi {

struct ModeSplit {
  QuadraticBlowup Q;
  Trace q;      // Q restricted to the sphere
  Trace minus;  // degrees < 2
  Trace zero;   // degree 2
  Trace plus;   // degrees > 2
  double distance = 0.0;

  Trace source() const { return q + minus + zero + plus; }
};

inline ModeSplit split_trace(const Trace& c) {
  if (c.basis->max_degree() < 3) throw PreconditionError("split_trace: need L >= 3");
  const Projection p = project_to_S(c);
  ModeSplit s;
  s.Q = p.blowup;
  s.q = eval_on_sphere(p.blowup, c.basis);
  s.distance = p.distance;
  const Trace rest = c - s.q;
  s.minus = filter_degrees(rest, [](int k) { return k < 2; });
  s.zero = filter_degrees(rest, [](int k) { return k == 2; });
  s.plus = filter_degrees(rest, [](int k) { return k > 2; });
  return s;
}

struct KeyDecomposition {
  Trace h2;
  Trace ha;
  double M = 0.0;
};

/// h2 = Q + eta_- + eta_0 + 8dM(1/(4d) - Q), h_alpha = eta_+ - 8dM(1/(4d) - Q).
inline KeyDecomposition build_h2_ha(const ModeSplit& s, int oversample = 8) {
  const BasisPtr& b = s.q.basis;
  const int d = b->dim();
  KeyDecomposition k;
  k.M = sup_negative_part(s.q + s.minus + s.zero, oversample);
  Trace corr = constant_trace(b, 1.0 / (4.0 * d)) - s.q;
  corr *= 8.0 * d * k.M;
  k.h2 = s.q + s.minus + s.zero + corr;
  k.ha = s.plus - corr;
  return k;
}

struct IdentityResiduals {
  double r34 = 0.0;
  double r35 = 0.0;
};

/// Residuals of h_a . gradF(h2 + t h_a) = 2t P and
/// F(h2 + t h_a) = F(Q) + N + t^2 P, with P, N the class energies of eta_+, eta_-.
inline IdentityResiduals key_identities_check(const ModeSplit& s, const KeyDecomposition& k, double t) {
  const double P = spectral_quadratic(s.plus), N = spectral_quadratic(s.minus);
  const Trace psi = k.h2 + t * k.ha;
  IdentityResiduals r;
  r.r34 = std::abs(dot(k.ha, gradF_of(psi)) - 2.0 * t * P);
  r.r35 = std::abs(F_of(psi) - F_of(s.q) - N - t * t * P);
  return r;
}

// ---------------------------------------------------------------------------
// Lipschitz integral bound: int_{B_R} F^2 >= 2 w_n M^{n+2} / ((n+1)(n+2) L^n), R = M / L.

struct LipschitzCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  double M = 0.0;
  double R = 0.0;
};

inline double unit_ball_volume(int n) {
  return n == 1 ? 2.0 : n == 2 ? std::numbers::pi : 4.0 * std::numbers::pi / 3.0;
}

inline double lipschitz_rhs(int n, double M, double L) {
  return 2.0 * unit_ball_volume(n) * std::pow(M, n + 2) / ((n + 1.0) * (n + 2.0) * std::pow(L, n));
}

/// n = 1: samples on a uniform grid x_i = x0 + i h, integrated exactly for the
/// piecewise linear interpolant.
inline LipschitzCheck lipschitz_bound_check_1d(const std::vector<double>& f, double h, double L) {
  const std::size_t n = f.size();
  if (n < 3 || !(h > 0.0) || !(L > 0.0)) throw PreconditionError("lipschitz_bound_check: bad input");
  for (double v : f)
    if (v < 0.0) throw PreconditionError("lipschitz_bound_check: F must be nonnegative");
  // among tied maxima take the one closest to the patch centre
  const double fmax = *std::max_element(f.begin(), f.end());
  std::size_t k = n;
  for (std::size_t i = 0; i < n; ++i)
    if (f[i] == fmax && (k == n || std::abs(2.0 * i - (n - 1.0)) < std::abs(2.0 * k - (n - 1.0)))) k = i;
  LipschitzCheck out;
  out.M = f[k];
  if (!(out.M > 0.0)) throw PreconditionError("lipschitz_bound_check: peak must be positive");
  out.R = out.M / L;
  const double xp = k * h, lo = xp - out.R, hi = xp + out.R;
  if (lo < -1e-12 || hi > (n - 1) * h + 1e-12)
    throw PreconditionError("lipschitz_bound_check: ball B_R leaves the patch");
  // integral of the square of a linear function over [a, b] within cell i
  auto cell = [&](std::size_t i, double a, double b) {
    const double x0 = i * h, s = (f[i + 1] - f[i]) / h;
    const double fa = f[i] + s * (a - x0), fb = f[i] + s * (b - x0);
    return (b - a) * (fa * fa + fa * fb + fb * fb) / 3.0;
  };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double a = std::max(lo, i * h), b = std::min(hi, (i + 1) * h);
    if (b > a) out.lhs += cell(i, a, b);
  }
  out.rhs = lipschitz_rhs(1, out.M, L);
  return out;
}

/// n = 2: samples on a uniform square grid f[i][j] at (i h, j h); bilinear interpolant
/// integrated in polar coordinates around the peak.
inline LipschitzCheck lipschitz_bound_check_2d(const std::vector<std::vector<double>>& f, double h, double L,
                                               int radial_pieces = 64, int angular_nodes = 720) {
  const std::size_t nx = f.size();
  if (nx < 3 || f[0].size() < 3 || !(h > 0.0) || !(L > 0.0))
    throw PreconditionError("lipschitz_bound_check: bad input");
  const std::size_t ny = f[0].size();
  std::size_t pi = 0, pj = 0;
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      if (f[i][j] < 0.0) throw PreconditionError("lipschitz_bound_check: F must be nonnegative");
      const double di = std::hypot(2.0 * i - (nx - 1.0), 2.0 * j - (ny - 1.0));
      const double dp = std::hypot(2.0 * pi - (nx - 1.0), 2.0 * pj - (ny - 1.0));
      if (f[i][j] > f[pi][pj] || (f[i][j] == f[pi][pj] && di < dp)) pi = i, pj = j;
    }
  LipschitzCheck out;
  out.M = f[pi][pj];
  if (!(out.M > 0.0)) throw PreconditionError("lipschitz_bound_check: peak must be positive");
  out.R = out.M / L;
  const double xp = pi * h, yp = pj * h, xmax = (nx - 1) * h, ymax = (ny - 1) * h;
  if (xp - out.R < -1e-12 || yp - out.R < -1e-12 || xp + out.R > xmax + 1e-12 || yp + out.R > ymax + 1e-12)
    throw PreconditionError("lipschitz_bound_check: ball B_R leaves the patch");
  auto interp = [&](double x, double y) {
    x = std::clamp(x, 0.0, xmax), y = std::clamp(y, 0.0, ymax);
    std::size_t i = std::min(static_cast<std::size_t>(x / h), nx - 2);
    std::size_t j = std::min(static_cast<std::size_t>(y / h), ny - 2);
    const double s = x / h - i, t = y / h - j;
    return (1 - s) * (1 - t) * f[i][j] + s * (1 - t) * f[i + 1][j] + (1 - s) * t * f[i][j + 1] + s * t * f[i + 1][j + 1];
  };
  std::vector<double> br;
  for (int k = 0; k <= radial_pieces; ++k) br.push_back(out.R * k / radial_pieces);
  const QuadratureRule rule = composite_gauss_legendre(8, br);
  const double dphi = 2.0 * std::numbers::pi / angular_nodes;
  for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
    const double rho = rule.nodes[q];
    double ring = 0.0;
    for (int a = 0; a < angular_nodes; ++a) {
      const double v = interp(xp + rho * std::cos(a * dphi), yp + rho * std::sin(a * dphi));
      ring += v * v;
    }
    out.lhs += rule.weights[q] * rho * ring * dphi;
  }
  out.rhs = lipschitz_rhs(2, out.M, L);
  return out;
}

// ---------------------------------------------------------------------------
// Competitors

/// h = r^2 h2 + r^{2+eps} h_alpha, stored as (mode, exponent, coefficient) terms.
inline RadialProfileField build_direct(const Trace& c, double eps, int oversample = 8) {
  if (!(eps > 0.0)) throw PreconditionError("build_direct: eps must be positive");
  const KeyDecomposition k = build_h2_ha(split_trace(c), oversample);
  RadialProfileField f{c.basis, {}, {}, {}};
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (k.h2[j] != 0.0) f.terms.push_back({j, 0.0, k.h2[j]});
    if (k.ha[j] != 0.0) f.terms.push_back({j, eps, k.ha[j]});
  }
  return f;
}

/// Q + eta_- + eta_0 kept 2-homogeneous, eta_+ extended with exponent e(j).
template <class ExponentOf>
RadialProfileField plus_modes_extension(const ModeSplit& s, ExponentOf exponent_of) {
  const Trace base = s.q + s.minus + s.zero;
  RadialProfileField f{s.q.basis, {}, {}, {}};
  for (std::size_t j = 0; j < base.size(); ++j) {
    if (base[j] != 0.0) f.terms.push_back({j, 0.0, base[j]});
    if (s.plus[j] != 0.0) f.terms.push_back({j, exponent_of(j), s.plus[j]});
  }
  return f;
}

/// Harmonic extension of eta_+ (r^{alpha_j}), quadratic part kept.
inline RadialProfileField build_harmonic_f(const Trace& c) {
  const ModeSplit s = split_trace(c);
  const BasisPtr b = c.basis;
  return plus_modes_extension(s, [&](std::size_t j) { return b->mode(j).degree - 2.0; });
}

/// eta_+ extended with the common homogeneity 2 + eps.
inline RadialProfileField build_uniform_ftilde(const Trace& c, double eps) {
  if (!(eps > 0.0)) throw PreconditionError("build_uniform_ftilde: eps must be positive");
  return plus_modes_extension(split_trace(c), [eps](std::size_t) { return eps; });
}

/// Minimum of h = r^2 u over the polar grid (shells x sphere quadrature nodes).
inline double polar_min(const RadialProfileField& f, int n_shells = 128) {
  const PolarField p = sample_polar(f, n_shells);
  double m = std::numeric_limits<double>::infinity();
  for (const auto& shell : p.values)
    for (double v : shell) m = std::min(m, v);
  return m;
}

// ---------------------------------------------------------------------------
// Certificates

struct EpiCertificate {
  std::string id;
  std::string method;
  double gamma = 0.0;
  double epsilon = 0.0;
  double W_z = 0.0;
  double W_h = 0.0;
  double W_S = 0.0;
  double bound = 0.0;  // right side for W(h) - W(S)
  bool pass = false;
  double positivity_min = 0.0;
  double gain_ratio = 0.0;  // (W(z) - W(h)) / gap^{1+gamma}
  bool degenerate = false;  // gap <= 0, h = z

  double gap() const { return W_z - W_S; }
};

/// Fill bound and verdict from W_z, W_h, W_S, epsilon and gamma.
inline void finalize_certificate(EpiCertificate& cert, double slack = 1e-10) {
  const double g = cert.gap();
  cert.bound = g * (1.0 - cert.epsilon * std::pow(std::abs(g), cert.gamma));
  cert.gain_ratio = g > 0.0 ? (cert.W_z - cert.W_h) / std::pow(g, 1.0 + cert.gamma) : 0.0;
  cert.pass = (cert.W_h - cert.W_S <= cert.bound + slack) && cert.positivity_min >= -slack;
}

struct DirectParams {
  double delta = 1e-2;
  double eps_cap = 0.5;
  double kappa_cal = 1.0;
  int oversample = 8;
  int polar_shells = 128;
};

/// Exponent of the direct construction, (d-1)/(d+1).
inline double direct_gamma(int d) { return (d - 1.0) / (d + 1.0); }

inline void check_admissible(const Trace& c, const ModeSplit& s, double W_S, double delta) {
  const double m = nodal_min(c);
  if (m < -1e-12) throw PreconditionError("trace is negative at a quadrature node (min " + std::to_string(m) + ")");
  if (s.distance > delta)
    throw PreconditionError("trace is farther than delta from S (distance " + std::to_string(s.distance) + ")");
  if (W_of_homogeneous(c) - W_S > 1.0) throw PreconditionError("energy gap W(z) - W(S) exceeds 1");
}

inline EpiCertificate certify_direct(const Trace& c, const DirectParams& prm = {}, const std::string& id = "") {
  const BasisPtr& b = c.basis;
  const int d = b->dim();
  const ReferenceEnergies ref = reference_energies(b);
  const ModeSplit s = split_trace(c);
  check_admissible(c, s, ref.W_S, prm.delta);

  EpiCertificate cert;
  cert.id = id;
  cert.method = "direct";
  cert.gamma = direct_gamma(d);
  cert.W_S = ref.W_S;
  cert.W_z = W_of_homogeneous(c);
  if (cert.gap() <= 0.0) {
    cert.degenerate = true;
    cert.W_h = cert.W_z;
    cert.epsilon = 0.0;
    cert.positivity_min = polar_min(homogeneous_extension(c), prm.polar_shells);
    finalize_certificate(cert);
    return cert;
  }
  const double w0_plus = class_energies(s.plus).plus;
  cert.epsilon = std::min(prm.eps_cap, prm.kappa_cal * std::pow(w0_plus, cert.gamma));
  if (!(cert.epsilon > 0.0)) {
    // no eta_+ content: the gap comes from degree-2 bookkeeping only
    cert.W_h = cert.W_z;
    cert.positivity_min = polar_min(homogeneous_extension(c), prm.polar_shells);
    finalize_certificate(cert);
    return cert;
  }
  const RadialProfileField h = build_direct(c, cert.epsilon, prm.oversample);
  cert.W_h = slicing_W(h);
  cert.positivity_min = polar_min(h, prm.polar_shells);
  finalize_certificate(cert);
  return cert;
}

}  // namespace logepi
