#pragma once

// Competitor from a flow: stop the flow, reparametrize time as -kappa ln r, and
// certify the epiperimetric gain from measured dissipation and Lojasiewicz
// constants.

#include <cmath>
#include <algorithm>
#include <string>
#include <tuple>
#include <utility>

#include "logepi/competitors.hpp"
#include "logepi/energy.hpp"
#include "logepi/errors.hpp"
#include "logepi/flows.hpp"
#include "logepi/quadrature.hpp"
#include "logepi/trajectory.hpp"

namespace logepi {

struct FlowGainParams {
  double alpha = 2.0;
  double p = 2.0;
  double beta = 0.0;
  double eps_kappa = 0.0;  // 0: largest admissible dyadic value
  double E = 1.0;
  double T_max = 2.0;
  double C_SL = 1.0;

  double gamma() const { return (1.0 + beta) * (2.0 - 2.0 / p) - 1.0; }
  double rate(int d) const { return 2.0 * alpha + d - 2.0; }

  void validate() const {
    if (!(p >= 2.0)) throw PreconditionError("FlowGainParams: p must be >= 2");
    if (!(beta >= 0.0 && beta < 1.0)) throw PreconditionError("FlowGainParams: beta must lie in [0, 1)");
    if (!((1.0 + beta) * (1.0 - 1.0 / p) < 1.0)) throw PreconditionError("FlowGainParams: (1+beta)(1-1/p) must be < 1");
    if (!(E > 0.0) || !(T_max > 0.0)) throw PreconditionError("FlowGainParams: E and T_max must be positive");
  }
};

/// C = C_SL max(1/C_ED, C_ED^{-2/p} c^{-(1-2/p)}).
inline double flow_gain_constant(const FlowGainParams& prm, double c, double C_ED) {
  return prm.C_SL * std::max(1.0 / C_ED, std::pow(C_ED, -2.0 / prm.p) * std::pow(c, -(1.0 - 2.0 / prm.p)));
}

/// Largest 2^{-m} with eps <= 1, eps C <= 1/(20c) and eps <= T_max.
inline double default_eps_kappa(const FlowGainParams& prm, double c, double C_ED) {
  const double C = flow_gain_constant(prm, c, C_ED);
  double eps = 1.0;
  for (int m = 0; m < 200; ++m, eps *= 0.5)
    if (eps * C <= 1.0 / (20.0 * c) && eps <= prm.T_max) return eps;
  throw PreconditionError("default_eps_kappa: no dyadic value satisfies the constraints");
}

struct FlowGainTerms {
  double t1 = 0.0;  // e^{-cT/k}(F(psi_T) - F0)/(2c)
  double t2 = 0.0;  // (1/(2c)) int psi' . gradF e^{-ct/k}
  double t3 = 0.0;  // k C_SL int |psi'|^2 e^{-ct/k}
  double I = 0.0;   // int_0^T D e^{-ct/k}
};

struct FlowGainResult {
  RadialProfileField field;
  EpiCertificate cert;
  int case_id = 0;  // 1: fast decay, 2: Lojasiewicz chain, 0: degenerate
  double kappa = 0.0;
  int iterations = 0;
  double eps_kappa = 0.0;
  double T_half = 0.0;
  double T = 0.0;
  double C_ED = 0.0;
  double C_LS = 0.0;
  double delta_G = 0.0;     // G(h) - G(z)
  double bound_gain = 0.0;  // certified G(z) - G(h)
  FlowGainTerms terms;
  bool chain_split = false;  // delta_G <= t1 + t2 + t3
  bool chain_tail = false;   // t3 <= I/(4c)
  bool chain_final = false;  // delta_G <= t1 - I/(4c)
};

namespace detail {

/// Stopping time at half the gap; exact energies for closed-form flows, linear
/// interpolation of the F samples otherwise.
inline double half_gap_time(const FlowTrajectory& traj, double F_S, double tol = 1e-6) {
  if (traj.closed_form()) return stopping_time(traj, F_S, 0.5, tol);
  const double level = F_S + 0.5 * (traj.F.front() - F_S);
  for (std::size_t k = 1; k < traj.size(); ++k) {
    if (traj.F[k] < level) {
      const double t0 = traj.times[k - 1], t1 = traj.times[k], f0 = traj.F[k - 1], f1 = traj.F[k];
      double lo = t0, hi = t1;
      while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        const double f = f0 + (f1 - f0) * (mid - t0) / (t1 - t0);
        (f < level ? hi : lo) = mid;
      }
      return lo;
    }
  }
  return traj.t_end();
}

/// int_0^T g(t) e^{-ct/k} dt on the trajectory breakpoints.
template <class G>
double weighted_integral(const FlowTrajectory& traj, double T, double c, double kappa, G g, int nodes = 32) {
  if (T <= 0.0) return 0.0;
  const QuadratureRule rule = composite_gauss_legendre(nodes, traj.breaks(T));
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i)
    s += rule.weights[i] * std::exp(-c * rule.nodes[i] / kappa) * g(rule.nodes[i]);
  return s;
}

}  // namespace detail

/// Fixed point kappa = eps (int_0^{min(T_half, kappa)} D e^{-ct/kappa})^{(p-2)/(2p-2)},
/// damped iteration from the E-bound. Returns (kappa, iterations).
inline std::pair<double, int> solve_kappa(const FlowTrajectory& traj, const FlowGainParams& prm, double c, double eps,
                                          double T_half) {
  const double q = (prm.p - 2.0) / (2.0 * prm.p - 2.0);
  const double k0 = eps * std::pow(prm.E, q);
  if (q == 0.0) return {k0, 1};
  auto g = [&](double k) {
    const double I = detail::weighted_integral(traj, std::min(T_half, k), c, k,
                                               [&](double t) { return std::max(traj.dissipation_at(t), 0.0); });
    return eps * std::pow(std::max(I, 0.0), q);
  };
  double k = k0, omega = 1.0;
  double res = std::abs(g(k) - k);
  for (int it = 1; it <= 100; ++it) {
    const double gk = g(k);
    if (std::abs(gk - k) <= 1e-8 * k) return {k, it};
    double next = (1.0 - omega) * k + omega * gk;
    if (!(next > 0.0)) next = 0.5 * k;
    const double r = std::abs(g(next) - next);
    if (r > res) omega = std::max(0.5 * omega, 1e-3);
    k = next;
    res = r;
  }
  throw ConvergenceError("solve_kappa: fixed-point iteration did not converge in 100 iterations");
}

/// Assemble and certify the flow competitor. C_ED and C_LS are the measured
/// constants of the dissipation and Lojasiewicz inequalities on this trajectory.
inline FlowGainResult assemble_flow_gain(const FlowTrajectory& traj, const FlowGainParams& prm, double F_S, double C_ED,
                                    double C_LS, const std::string& id = "") {
  prm.validate();
  const BasisPtr& b = traj.basis;
  const double c = prm.rate(b->dim());
  const double F0 = traj.F.front();
  const double gapF = F0 - F_S;
  if (gapF > prm.E) throw PreconditionError("assemble_flow_gain: F(psi0) - F(S) exceeds E");

  FlowGainResult out;
  out.C_ED = C_ED;
  out.C_LS = C_LS;
  EpiCertificate& cert = out.cert;
  cert.id = id;
  cert.method = "flow";
  cert.gamma = prm.gamma();
  cert.W_S = F_S / c;
  cert.W_z = F0 / c;
  const Trace psi0 = traj.state_at(0.0);

  if (gapF <= 0.0) {
    out.field = homogeneous_extension(psi0);
    cert.degenerate = true;
    cert.W_h = cert.W_z;
    cert.positivity_min = refined_min(psi0);
    finalize_certificate(cert);
    out.chain_split = out.chain_tail = out.chain_final = true;
    return out;
  }
  if (!(C_ED > 0.0) || !(C_LS > 0.0))
    throw PreconditionError("assemble_flow_gain: dissipation and Lojasiewicz constants must be positive");

  out.eps_kappa = prm.eps_kappa > 0.0 ? prm.eps_kappa : default_eps_kappa(prm, c, std::min(C_ED, 1e300));
  const double C = flow_gain_constant(prm, c, std::min(C_ED, 1e300));
  if (out.eps_kappa > 1.0 || out.eps_kappa * C > 1.0 / (20.0 * c) * (1.0 + 1e-12) || out.eps_kappa > prm.T_max)
    throw PreconditionError("assemble_flow_gain: eps_kappa violates its admissibility bounds");
  out.T_half = detail::half_gap_time(traj, F_S);
  std::tie(out.kappa, out.iterations) = solve_kappa(traj, prm, c, out.eps_kappa, out.T_half);
  if (out.kappa > out.eps_kappa * std::pow(prm.E, (prm.p - 2.0) / (2.0 * prm.p - 2.0)) * (1.0 + 1e-9))
    throw ConsistencyError("assemble_flow_gain: kappa above its a priori bound");
  out.case_id = out.T_half <= out.kappa ? 1 : 2;
  out.T = std::min(out.T_half, out.kappa);
  if (!traj.closed_form() && out.T > traj.t_end() * (1.0 + 1e-12))
    throw PreconditionError("assemble_flow_gain: trajectory shorter than the stopping time");

  const double k = out.kappa, T = out.T;
  const ReparamResult forms = reparam_W_forms(traj, k, T, c, prm.C_SL);
  const double scale = std::max({1.0, std::abs(forms.form_integral), std::abs(forms.form_dissipation)});
  if (std::abs(forms.form_integral - forms.form_dissipation) > 1e-6 * scale)
    throw ConsistencyError("assemble_flow_gain: integral and dissipation forms disagree");
  cert.W_h = forms.form_dissipation;
  out.delta_G = cert.W_h - cert.W_z;

  FlowGainTerms& tm = out.terms;
  tm.I = detail::weighted_integral(traj, T, c, k, [&](double t) { return traj.dissipation_at(t); });
  tm.t1 = std::exp(-c * T / k) * (traj.energy_at(T) - F0) / (2.0 * c);
  tm.t2 = -tm.I / (2.0 * c);
  tm.t3 = prm.C_SL * k *
          detail::weighted_integral(traj, T, c, k, [&](double t) { return norm2(traj.derivative_at(t)); });
  const double slack = 1e-12 * std::max(1.0, std::abs(F0));
  out.chain_split = out.delta_G <= tm.t1 + tm.t2 + tm.t3 + slack;
  out.chain_tail = tm.t3 <= tm.I / (4.0 * c) + slack;
  out.chain_final = out.delta_G <= tm.t1 - tm.I / (4.0 * c) + slack;

  if (out.case_id == 1) {
    out.bound_gain = std::exp(-c) / (4.0 * c) * gapF;
  } else {
    const double C2 = out.eps_kappa * C_LS * (1.0 - std::exp(-c)) / (c * std::pow(2.0, 1.0 + prm.beta));
    out.bound_gain = std::pow(C2, 2.0 - 2.0 / prm.p) * std::pow(gapF, 1.0 + prm.gamma()) / (4.0 * c);
  }
  // express the gain as epsilon on the W-gap: W_z - W_h >= epsilon gap^{1+gamma}
  cert.epsilon = out.bound_gain / std::pow(cert.gap(), 1.0 + cert.gamma);
  out.field = reparametrized_field(traj, k, T);
  if (traj.closed_form()) {
    cert.positivity_min = std::min(refined_min(traj.state_at(T)), polar_min(out.field, 64));
  } else {
    // sampled flows are nonnegative on their own grid; interpolated states are convex combinations
    cert.positivity_min = traj.nodal_min.front();
    for (std::size_t i = 0; i < traj.size() && traj.times[i] <= T + traj.times.back() * 1e-12; ++i)
      cert.positivity_min = std::min(cert.positivity_min, traj.nodal_min[i]);
    if (traj.segment(T) + 1 < traj.size())
      cert.positivity_min = std::min(cert.positivity_min, traj.nodal_min[traj.segment(T) + 1]);
  }
  finalize_certificate(cert, 1e-12);
  return out;
}

}  // namespace logepi
