#pragma once

// Flows on the sphere: the explicit flow h2 + e^{-st} h_alpha, the projected
// gradient flow of F on {v >= 0}, the unconstrained linear gradient flow, and
// probes for the dissipation / Lojasiewicz / Gronwall inequalities.

#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "logepi/competitors.hpp"
#include "logepi/critical_set.hpp"
#include "logepi/errors.hpp"
#include "logepi/functional.hpp"
#include "logepi/quadrature.hpp"
#include "logepi/trace.hpp"
#include "logepi/trajectory.hpp"

namespace logepi {

inline std::vector<double> uniform_times(double T, int steps) {
  std::vector<double> t;
  for (int k = 0; k <= steps; ++k) t.push_back(T * k / steps);
  return t;
}

/// psi(t) = h2 + e^{-rate t} h_alpha with exact derivative.
inline FlowTrajectory explicit_flow(const ModeSplit& split, const std::vector<double>& times, double rate = 1.0,
                                    int oversample = 8) {
  const KeyDecomposition k = build_h2_ha(split, oversample);
  FlowTrajectory traj;
  traj.basis = split.q.basis;
  traj.times = times;
  const Trace h2 = k.h2, ha = k.ha;
  traj.exact_state = [h2, ha, rate](double t) { return h2 + std::exp(-rate * t) * ha; };
  traj.exact_derivative = [ha, rate](double t) { return (-rate * std::exp(-rate * t)) * ha; };
  for (double t : times) {
    traj.states.push_back(traj.exact_state(t));
    traj.derivatives.push_back(traj.exact_derivative(t));
  }
  finalize_samples(traj);
  return traj;
}

/// 2 rate e^{-2 rate t} int(|grad eta_+|^2 - 2d eta_+^2): the dissipation of the explicit flow.
inline double explicit_flow_dissipation(const ModeSplit& split, double t, double rate = 1.0) {
  return 2.0 * rate * std::exp(-2.0 * rate * t) * spectral_quadratic(split.plus);
}

/// Unconstrained gradient flow psi' = -gradF(psi), solved mode by mode:
/// c_j(t) = c*_j + (c_j(0) - c*_j) e^{-(2 lambda_j - 4d) t}.
inline FlowTrajectory linear_gradient_flow(const Trace& c, const std::vector<double>& times) {
  const BasisPtr b = c.basis;
  const int d = b->dim();
  // equilibrium of the degree-0 mode: -4d c0 + sqrt|dB| = 0
  const double c0_star = std::sqrt(b->surface_area()) / (4.0 * d);
  FlowTrajectory traj;
  traj.basis = b;
  traj.times = times;
  traj.exact_state = [c, c0_star, d](double t) {
    Trace out = c;
    for (std::size_t j = 0; j < c.size(); ++j) {
      const double rate = 2.0 * c.basis->mode(j).lambda - 4.0 * d;
      const double eq = j == 0 ? c0_star : 0.0;
      out[j] = c.basis->mode(j).degree == 2 ? c[j] : eq + (c[j] - eq) * std::exp(-rate * t);
    }
    return out;
  };
  traj.exact_derivative = [c, c0_star, d](double t) {
    Trace out(c.basis);
    for (std::size_t j = 0; j < c.size(); ++j) {
      if (c.basis->mode(j).degree == 2) continue;
      const double rate = 2.0 * c.basis->mode(j).lambda - 4.0 * d;
      const double eq = j == 0 ? c0_star : 0.0;
      out[j] = -rate * (c[j] - eq) * std::exp(-rate * t);
    }
    return out;
  };
  for (double t : times) {
    traj.states.push_back(traj.exact_state(t));
    traj.derivatives.push_back(traj.exact_derivative(t));
  }
  finalize_samples(traj);
  return traj;
}

/// Largest stable explicit step, 1 / (2 lambda_max - 4d + 1).
inline double pvi_dt_max(const SphereBasis& b) { return 1.0 / (2.0 * b.max_eigenvalue() - 4.0 * b.dim() + 1.0); }

/// Interpolating collocation grid on the circle: 2L+1 uniform nodes, for which
/// the discrete inner product equals the coefficient inner product.
struct CircleCollocation {
  BasisPtr basis;
  std::vector<double> weights;
  std::vector<std::vector<double>> phi;  // [node][mode]

  explicit CircleCollocation(const BasisPtr& b) : basis(b) {
    if (b->dim() != 2) throw PreconditionError("pvi_gradient_flow: only d = 2 is supported");
    const int n = 2 * b->max_degree() + 1;
    for (int q = 0; q < n; ++q) {
      phi.push_back(b->evaluate(SphereBasis::from_angle(2.0 * std::numbers::pi * q / n)));
      weights.push_back(2.0 * std::numbers::pi / n);
    }
  }
  std::vector<double> synthesize(const Trace& t) const {
    std::vector<double> v(phi.size(), 0.0);
    for (std::size_t q = 0; q < phi.size(); ++q)
      for (std::size_t j = 0; j < t.size(); ++j) v[q] += phi[q][j] * t[j];
    return v;
  }
  Trace analyze(const std::vector<double>& v) const {
    Trace t(basis);
    for (std::size_t q = 0; q < phi.size(); ++q)
      for (std::size_t j = 0; j < t.size(); ++j) t[j] += weights[q] * v[q] * phi[q][j];
    return t;
  }
};

/// Projected explicit Euler for the parabolic variational inequality:
/// psi_{k+1} = max(psi_k - dt gradF(psi_k), 0) on the collocation nodes.
inline FlowTrajectory pvi_gradient_flow(const Trace& c, double dt, double T_max) {
  const BasisPtr b = c.basis;
  const CircleCollocation grid(b);
  if (!(dt > 0.0) || dt > pvi_dt_max(*b) * (1.0 + 1e-12))
    throw PreconditionError("pvi_gradient_flow: dt = " + std::to_string(dt) + " exceeds the stability bound " +
                            std::to_string(pvi_dt_max(*b)));
  if (!(T_max > 0.0)) throw PreconditionError("pvi_gradient_flow: T_max must be positive");
  const std::vector<double> v0 = grid.synthesize(c);
  for (double v : v0)
    if (v < -1e-12) throw PreconditionError("pvi_gradient_flow: initial trace is negative at a node");
  if (nodal_min(c) < -1e-12) throw PreconditionError("pvi_gradient_flow: initial trace is negative at a node");

  const int steps = static_cast<int>(std::ceil(T_max / dt - 1e-9));
  FlowTrajectory traj;
  traj.basis = b;
  Trace psi = c;
  auto step = [&](const Trace& s) {
    const Trace g = gradF_of(s);
    std::vector<double> v = grid.synthesize(s), gv = grid.synthesize(g);
    for (std::size_t q = 0; q < v.size(); ++q) v[q] = std::max(v[q] - dt * gv[q], 0.0);
    return grid.analyze(v);
  };
  Trace next = step(psi);
  for (int k = 0; k <= steps; ++k) {
    traj.times.push_back(k * dt);
    traj.states.push_back(psi);
    Trace dpsi = next - psi;
    dpsi *= 1.0 / dt;
    traj.derivatives.push_back(dpsi);
    psi = next;
    next = step(psi);
  }
  finalize_samples(traj);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const std::vector<double> v = grid.synthesize(traj.states[k]);
    traj.nodal_min[k] = *std::min_element(v.begin(), v.end());
  }
  return traj;
}

/// int_0^T | |psi'(t)|^2 + psi'(t) . gradF(psi(t)) | dt along the piecewise linear
/// interpolant, Gauss-Legendre on every step.
inline double dissipation_identity_error(const FlowTrajectory& traj, double T, int nodes = 4) {
  const QuadratureRule rule = composite_gauss_legendre(nodes, traj.breaks(std::min(T, traj.t_end())));
  double e = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double t = rule.nodes[i];
    e += rule.weights[i] * std::abs(norm2(traj.derivative_at(t)) - traj.dissipation_at(t));
  }
  return e;
}

// ---------------------------------------------------------------------------
// Probes

constexpr double kNoHorizon = std::numeric_limits<double>::infinity();

/// min_k D_k / min(|psi'|^2, |psi'|^p) over samples with t_k <= horizon; +inf if
/// every sample is skipped (|psi'| <= 1e-12).
inline double check_dissipation(const FlowTrajectory& traj, double p, double horizon = kNoHorizon) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.times[k] > horizon) break;
    const double n = norm(traj.derivatives[k]);
    if (n <= 1e-12) continue;
    best = std::min(best, traj.D[k] / std::min(n * n, std::pow(n, p)));
  }
  return best;
}

/// min_k D_k / (F_k - F_S)^{1+beta}, skipping F_k - F_S <= 1e-12; +inf if all skipped.
inline double check_lojasiewicz(const FlowTrajectory& traj, double beta, double F_S, double horizon = kNoHorizon) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.times[k] > horizon) break;
    const double gap = traj.F[k] - F_S;
    if (gap < -1e-10)
      throw PreconditionError("check_lojasiewicz: energy below F(S) at t = " + std::to_string(traj.times[k]));
    if (gap <= 1e-12) continue;
    best = std::min(best, traj.D[k] / std::pow(gap, 1.0 + beta));
  }
  return best;
}

/// sup{s : F(psi(t)) - F_S >= fraction (F(psi(0)) - F_S) on [0, s]}, located by a
/// sample scan and bisection to 1e-6; clamped to the trajectory end.
inline double stopping_time(const FlowTrajectory& traj, double F_S, double fraction = 0.5, double tol = 1e-6) {
  const double F0 = traj.F.front();
  const double level = F_S + fraction * (F0 - F_S);
  for (std::size_t k = 1; k < traj.size(); ++k) {
    if (traj.F[k] < level) {
      double lo = traj.times[k - 1], hi = traj.times[k];
      while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (traj.energy_at(mid) < level ? hi : lo) = mid;
      }
      return lo;
    }
  }
  return traj.t_end();
}

/// Largest sample time up to which F - F_S stays positive (the window where the
/// Lojasiewicz ratio is defined).
inline double positive_gap_horizon(const FlowTrajectory& traj, double F_S) {
  double h = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.F[k] - F_S <= 1e-12) break;
    h = traj.times[k];
  }
  return h;
}

/// (a, b) = (8d + 1, |dB|).
inline std::pair<double, double> gronwall_constants(int d) { return {8.0 * d + 1.0, unit_sphere_area(d)}; }

/// max_k (|psi_k - Q|^2 - (b/a)(e^{a t} - 1) - e^{a t}|psi_0 - Q|^2)^+.
inline double gronwall_check(const FlowTrajectory& traj, const QuadraticBlowup& Q) {
  const BasisPtr& b = traj.basis;
  const auto [a, bb] = gronwall_constants(b->dim());
  const Trace q = eval_on_sphere(Q, b);
  const double d0 = norm2(traj.states.front() - q);
  double worst = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const double t = traj.times[k];
    const double rhs = bb / a * std::expm1(a * t) + std::exp(a * t) * d0;
    worst = std::max(worst, norm2(traj.states[k] - q) - rhs);
  }
  return worst;
}

inline double distance_to_S(const Trace& t) { return project_to_S(t).distance; }

}  // namespace logepi
