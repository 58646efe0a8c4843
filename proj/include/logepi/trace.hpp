#pragma once

// Functions on the unit sphere stored as real spectral coefficients.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "logepi/errors.hpp"
#include "logepi/sphere_basis.hpp"

namespace logepi {

struct Trace {
  BasisPtr basis;
  std::vector<double> coeffs;

  Trace() = default;
  explicit Trace(BasisPtr b) : basis(std::move(b)), coeffs(basis->size(), 0.0) {}
  Trace(BasisPtr b, std::vector<double> c) : basis(std::move(b)), coeffs(std::move(c)) {
    if (coeffs.size() != basis->size()) throw PreconditionError("Trace: coefficient count mismatch");
  }

  std::size_t size() const { return coeffs.size(); }
  double operator[](std::size_t j) const { return coeffs[j]; }
  double& operator[](std::size_t j) { return coeffs[j]; }

  Trace& operator+=(const Trace& o) {
    for (std::size_t j = 0; j < coeffs.size(); ++j) coeffs[j] += o.coeffs[j];
    return *this;
  }
  Trace& operator-=(const Trace& o) {
    for (std::size_t j = 0; j < coeffs.size(); ++j) coeffs[j] -= o.coeffs[j];
    return *this;
  }
  Trace& operator*=(double s) {
    for (double& c : coeffs) c *= s;
    return *this;
  }
};

inline Trace operator+(Trace a, const Trace& b) { return a += b; }
inline Trace operator-(Trace a, const Trace& b) { return a -= b; }
inline Trace operator*(double s, Trace a) { return a *= s; }
inline Trace operator*(Trace a, double s) { return a *= s; }

/// Trace of a constant function.
inline Trace constant_trace(const BasisPtr& basis, double value) {
  Trace t(basis);
  t[0] = value * std::sqrt(basis->surface_area());
  return t;
}

inline std::vector<double> synthesize(const Trace& t) {
  const SphereBasis& b = *t.basis;
  std::vector<double> out(b.node_count(), 0.0);
  for (std::size_t q = 0; q < out.size(); ++q) {
    const auto row = b.phi_row(q);
    double s = 0.0;
    for (std::size_t j = 0; j < row.size(); ++j) s += row[j] * t.coeffs[j];
    out[q] = s;
  }
  return out;
}

inline Trace analyze(std::span<const double> samples, const BasisPtr& basis) {
  if (samples.size() != basis->node_count()) {
    throw PreconditionError("analyze: got " + std::to_string(samples.size()) + " samples, basis has " +
                            std::to_string(basis->node_count()) + " nodes");
  }
  Trace t(basis);
  const auto w = basis->weights();
  for (std::size_t q = 0; q < samples.size(); ++q) {
    const double f = w[q] * samples[q];
    const auto row = basis->phi_row(q);
    for (std::size_t j = 0; j < row.size(); ++j) t.coeffs[j] += f * row[j];
  }
  return t;
}

inline double integrate(std::span<const double> samples, const SphereBasis& basis) {
  if (samples.size() != basis.node_count()) throw PreconditionError("integrate: node count mismatch");
  double s = 0.0;
  const auto w = basis.weights();
  for (std::size_t q = 0; q < samples.size(); ++q) s += w[q] * samples[q];
  return s;
}

/// Value of a trace at an arbitrary point of the sphere.
inline double evaluate(const Trace& t, const Point& x) {
  const std::vector<double> phi = t.basis->evaluate(x);
  double s = 0.0;
  for (std::size_t j = 0; j < phi.size(); ++j) s += phi[j] * t.coeffs[j];
  return s;
}

/// L2(sphere) inner product, exact in coefficient space.
inline double dot(const Trace& a, const Trace& b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.coeffs.size(); ++j) s += a.coeffs[j] * b.coeffs[j];
  return s;
}
inline double norm2(const Trace& a) { return dot(a, a); }
inline double norm(const Trace& a) { return std::sqrt(norm2(a)); }

/// Sum_j (lambda_j - 2d) c_j^2, i.e. the integral of |grad phi|^2 - 2d phi^2.
inline double spectral_quadratic(const Trace& t) {
  const SphereBasis& b = *t.basis;
  double s = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) s += (b.mode(j).lambda - 2.0 * b.dim()) * t[j] * t[j];
  return s;
}

/// Integral of |grad_theta phi|^2.
inline double dirichlet_energy(const Trace& t) {
  double s = 0.0;
  for (std::size_t j = 0; j < t.size(); ++j) s += t.basis->mode(j).lambda * t[j] * t[j];
  return s;
}

inline double nodal_min(const Trace& t) {
  const std::vector<double> v = synthesize(t);
  return *std::min_element(v.begin(), v.end());
}

namespace detail {

inline double min_on_circle(const Trace& t, int oversample) {
  const int L = t.basis->max_degree();
  const int n = oversample * (4 * L + 1);
  const double two_pi = 2.0 * std::numbers::pi;
  double best = std::numeric_limits<double>::infinity(), arg = 0.0;
  for (int q = 0; q < n; ++q) {
    const double a = two_pi * q / n;
    const double v = evaluate(t, SphereBasis::from_angle(a));
    if (v < best) best = v, arg = a;
  }
  double half = two_pi / n;
  for (int stage = 0; stage < 14 && half > 1e-14; ++stage) {
    const double c = arg;
    for (int k = -oversample; k <= oversample; ++k) {
      const double a = c + half * k / oversample;
      const double v = evaluate(t, SphereBasis::from_angle(a));
      if (v < best) best = v, arg = a;
    }
    half /= oversample;
  }
  return best;
}

inline double min_on_sphere(const Trace& t, int oversample) {
  const int L = t.basis->max_degree();
  const int nt = oversample * (2 * L + 1), np = oversample * (2 * L + 2);
  const double pi = std::numbers::pi;
  double best = std::numeric_limits<double>::infinity(), at = 0.0, ap = 0.0;
  for (int a = 0; a <= nt; ++a) {
    const double th = pi * a / nt;
    for (int b = 0; b < np; ++b) {
      const double ph = 2.0 * pi * b / np;
      const double v = evaluate(t, SphereBasis::from_spherical(th, ph));
      if (v < best) best = v, at = th, ap = ph;
    }
  }
  double ht = pi / nt, hp = 2.0 * pi / np;
  const int k = 4;
  for (int stage = 0; stage < 40 && std::max(ht, hp) > 1e-12; ++stage) {
    const double ct = at, cp = ap;
    for (int i = -k; i <= k; ++i) {
      const double th = std::clamp(ct + ht * i / k, 0.0, pi);
      for (int l = -k; l <= k; ++l) {
        const double ph = cp + hp * l / k;
        const double v = evaluate(t, SphereBasis::from_spherical(th, ph));
        if (v < best) best = v, at = th, ap = ph;
      }
    }
    ht *= 2.0 / k;
    hp *= 2.0 / k;
  }
  return best;
}

}  // namespace detail

/// Minimum of a band-limited trace over the whole sphere: oversampled nodal scan
/// followed by local zooming around the arg-min.
inline double refined_min(const Trace& t, int oversample = 8) {
  if (oversample < 1) throw PreconditionError("refined_min: oversampling must be >= 1");
  return t.basis->dim() == 2 ? detail::min_on_circle(t, oversample) : detail::min_on_sphere(t, oversample);
}

/// M = max(0, max of the negative part).
inline double sup_negative_part(const Trace& t, int oversample = 8) {
  return std::max(0.0, -refined_min(t, oversample));
}

/// Copy keeping only modes whose degree satisfies pred.
template <class Pred>
Trace filter_degrees(const Trace& t, Pred pred) {
  Trace out(t.basis);
  for (std::size_t j = 0; j < t.size(); ++j)
    if (pred(t.basis->mode(j).degree)) out[j] = t[j];
  return out;
}

}  // namespace logepi
