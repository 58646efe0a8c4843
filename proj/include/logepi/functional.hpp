#pragma once

// The spherical energy F(phi) = int |grad phi|^2 - 2d phi^2 + phi and its gradient.

#include <cmath>

#include "logepi/trace.hpp"

namespace logepi {

inline double F_of(const Trace& t) {
  return spectral_quadratic(t) + t[0] * std::sqrt(t.basis->surface_area());
}

/// -2 Lap phi - 4d phi + 1, spectrally.
inline Trace gradF_of(const Trace& t) {
  const SphereBasis& b = *t.basis;
  Trace g(t.basis);
  for (std::size_t j = 0; j < t.size(); ++j) g[j] = (2.0 * b.mode(j).lambda - 4.0 * b.dim()) * t[j];
  g[0] += std::sqrt(b.surface_area());
  return g;
}

/// Homogeneity shift used by the slicing identities: 2 alpha + d - 2.
inline double slicing_rate(double alpha, int dim) { return 2.0 * alpha + dim - 2.0; }

}  // namespace logepi
