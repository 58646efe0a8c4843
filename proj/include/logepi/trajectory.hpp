#pragma once

// Time-sampled sphere functions psi(t_k) with derivatives, dissipation and energy.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "logepi/errors.hpp"
#include "logepi/functional.hpp"
#include "logepi/trace.hpp"

namespace logepi {

struct FlowTrajectory {
  BasisPtr basis;
  std::vector<double> times;
  std::vector<Trace> states;
  std::vector<Trace> derivatives;
  std::vector<double> D;          // -psi' . gradF(psi)
  std::vector<double> F;          // F(psi)
  std::vector<double> nodal_min;  // min of psi over the quadrature nodes

  // Closed-form evaluators; when empty the samples are interpolated linearly in t.
  std::function<Trace(double)> exact_state;
  std::function<Trace(double)> exact_derivative;

  std::size_t size() const { return times.size(); }
  double t_end() const { return times.empty() ? 0.0 : times.back(); }
  bool closed_form() const { return static_cast<bool>(exact_state); }

  /// Index k with times[k] <= t < times[k+1] (clamped to the last segment).
  std::size_t segment(double t) const {
    if (times.size() < 2) return 0;
    auto it = std::upper_bound(times.begin(), times.end(), t);
    std::size_t k = it == times.begin() ? 0 : static_cast<std::size_t>(it - times.begin()) - 1;
    return std::min(k, times.size() - 2);
  }

  Trace state_at(double t) const {
    if (exact_state) return exact_state(t);
    if (times.size() == 1) return states[0];
    const std::size_t k = segment(t);
    const double s = (t - times[k]) / (times[k + 1] - times[k]);
    Trace out = states[k];
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += s * (states[k + 1][j] - states[k][j]);
    return out;
  }

  Trace derivative_at(double t) const {
    if (exact_derivative) return exact_derivative(t);
    if (times.size() == 1) return derivatives[0];
    const std::size_t k = segment(t);
    Trace out = states[k + 1] - states[k];
    out *= 1.0 / (times[k + 1] - times[k]);
    return out;
  }

  double dissipation_at(double t) const { return -dot(derivative_at(t), gradF_of(state_at(t))); }
  double energy_at(double t) const { return F_of(state_at(t)); }

  /// Breakpoints of the trajectory representation inside [0, T].
  std::vector<double> breaks(double T, int closed_form_pieces = 32) const {
    std::vector<double> out{0.0};
    if (closed_form()) {
      for (int i = 1; i <= closed_form_pieces; ++i) out.push_back(T * i / closed_form_pieces);
      return out;
    }
    for (double t : times)
      if (t > 0.0 && t < T) out.push_back(t);
    out.push_back(T);
    return out;
  }
};

/// Fill D, F and nodal_min from states and derivatives.
inline void finalize_samples(FlowTrajectory& traj) {
  traj.D.resize(traj.size());
  traj.F.resize(traj.size());
  traj.nodal_min.resize(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    traj.D[k] = -dot(traj.derivatives[k], gradF_of(traj.states[k]));
    traj.F[k] = F_of(traj.states[k]);
    traj.nodal_min[k] = nodal_min(traj.states[k]);
  }
}

/// Trajectory that stays at c for all times in the grid.
inline FlowTrajectory stationary_flow(const Trace& c, const std::vector<double>& times) {
  FlowTrajectory traj;
  traj.basis = c.basis;
  traj.times = times;
  traj.states.assign(times.size(), c);
  traj.derivatives.assign(times.size(), Trace(c.basis));
  traj.exact_state = [c](double) { return c; };
  traj.exact_derivative = [c](double) { return Trace(c.basis); };
  finalize_samples(traj);
  return traj;
}

}  // namespace logepi
