#pragma once

// Weiss energies W0, W of fields on the unit ball: spectral closed forms, the
// radial slicing identity, a direct volumetric quadrature on a polar grid, and
// the time-reparametrized slicing of a flow.

#include <cmath>
#include <functional>
#include <map>
#include <utility>
#include <vector>

#include "logepi/critical_set.hpp"
#include "logepi/errors.hpp"
#include "logepi/functional.hpp"
#include "logepi/quadrature.hpp"
#include "logepi/trace.hpp"
#include "logepi/trajectory.hpp"

namespace logepi {

/// One closed-form contribution coef * r^exponent * phi_mode to the profile u.
struct PowerTerm {
  std::size_t mode = 0;
  double exponent = 0.0;
  double coef = 0.0;
};

/// Field h(r, theta) = r^2 u(r, theta) on B1, where u = sum_j a_j(r) phi_j(theta).
struct RadialProfileField {
  using Evaluator = std::function<void(double r, std::vector<double>& a, std::vector<double>& da)>;

  BasisPtr basis;
  std::vector<PowerTerm> terms;  // closed form, used when `sampled` is empty
  Evaluator sampled;             // general profiles
  std::vector<double> breaks;    // radii in (0,1) where the profile is only piecewise smooth

  bool closed_form() const { return !sampled; }

  /// Profile coefficients a_j(r) and their r-derivatives.
  void eval(double r, std::vector<double>& a, std::vector<double>& da) const {
    a.assign(basis->size(), 0.0);
    da.assign(basis->size(), 0.0);
    if (sampled) {
      sampled(r, a, da);
      return;
    }
    for (const PowerTerm& t : terms) {
      if (t.exponent == 0.0) {
        a[t.mode] += t.coef;
      } else {
        const double p = std::pow(r, t.exponent);
        a[t.mode] += t.coef * p;
        da[t.mode] += t.coef * t.exponent * (r > 0.0 ? p / r : 0.0);
      }
    }
  }

  Trace profile_at(double r) const {
    std::vector<double> a, da;
    eval(r, a, da);
    return Trace(basis, a);
  }

  Trace boundary() const { return profile_at(1.0); }
};

/// z = r^2 c.
inline RadialProfileField homogeneous_extension(const Trace& c) {
  RadialProfileField f{c.basis, {}, {}, {}};
  for (std::size_t j = 0; j < c.size(); ++j)
    if (c[j] != 0.0) f.terms.push_back({j, 0.0, c[j]});
  return f;
}

/// Profile with u_j(r) = c_j r^{eps_j}.
inline RadialProfileField power_extension(const Trace& c, const std::vector<double>& eps) {
  if (eps.size() != c.size()) throw PreconditionError("power_extension: exponent count mismatch");
  RadialProfileField f{c.basis, {}, {}, {}};
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (eps[j] < 0.0) throw PreconditionError("power_extension: negative exponent");
    if (c[j] != 0.0) f.terms.push_back({j, eps[j], c[j]});
  }
  return f;
}

/// Cubic Hermite interpolation of profile samples on an increasing radial grid
/// ending at r = 1; node slopes from three-point differences.
inline RadialProfileField sampled_profile(const BasisPtr& basis, std::vector<double> radii,
                                          std::vector<std::vector<double>> values) {
  const std::size_t n = radii.size();
  if (n < 2 || values.size() != n) throw PreconditionError("sampled_profile: need matching samples");
  if (std::abs(radii.back() - 1.0) > 1e-14) throw PreconditionError("sampled_profile: grid must end at r = 1");
  const std::size_t m = basis->size();
  std::vector<std::vector<double>> slopes(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i == 0 ? 0 : i - 1, hi = i + 1 == n ? n - 1 : i + 1;
    for (std::size_t j = 0; j < m; ++j)
      slopes[i][j] = (values[hi][j] - values[lo][j]) / (radii[hi] - radii[lo]);
  }
  RadialProfileField f{basis, {}, {}, {}};
  f.sampled = [radii, values, slopes, m](double r, std::vector<double>& a, std::vector<double>& da) {
    std::size_t k = 0;
    if (r <= radii.front()) {
      for (std::size_t j = 0; j < m; ++j) a[j] = values.front()[j], da[j] = 0.0;
      return;
    }
    while (k + 2 < radii.size() && r > radii[k + 1]) ++k;
    const double h = radii[k + 1] - radii[k], s = (r - radii[k]) / h;
    const double h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
    const double h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);
    const double d00 = 6 * s * s - 6 * s, d10 = 3 * s * s - 4 * s + 1;
    const double d01 = -d00, d11 = 3 * s * s - 2 * s;
    for (std::size_t j = 0; j < m; ++j) {
      const double y0 = values[k][j], y1 = values[k + 1][j];
      const double m0 = slopes[k][j] * h, m1 = slopes[k + 1][j] * h;
      a[j] = h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1;
      da[j] = (d00 * y0 + d10 * m0 + d01 * y1 + d11 * m1) / h;
    }
  };
  for (std::size_t i = 0; i + 1 < n; ++i)
    if (radii[i] > 0.0) f.breaks.push_back(radii[i]);
  return f;
}

/// max_j |a_j(1) - c_j|.
inline double anchoring_error(const RadialProfileField& f, const Trace& c) {
  const Trace b = f.boundary();
  double e = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) e = std::max(e, std::abs(b[j] - c[j]));
  return e;
}

/// Closed-form W0 of r^2 u with u = sum_k b_k r^{e_k} phi_{j_k}; exact because the
/// modes are orthogonal and the radial integrals are elementary.
inline double W0_terms(const BasisPtr& basis, const std::vector<PowerTerm>& terms,
                       std::vector<double>* per_mode = nullptr) {
  const int d = basis->dim();
  if (per_mode) per_mode->assign(basis->size(), 0.0);
  double total = 0.0;
  for (const PowerTerm& s : terms) {
    if (s.exponent < 0.0) throw PreconditionError("W0_homog: negative exponent");
    for (const PowerTerm& t : terms) {
      if (s.mode != t.mode) continue;
      const double lam = basis->mode(s.mode).lambda;
      const double v = s.coef * t.coef * ((lam - 2.0 * d) + s.exponent * t.exponent) /
                       (d + 2.0 + s.exponent + t.exponent);
      total += v;
      if (per_mode) (*per_mode)[s.mode] += v;
    }
  }
  return total;
}

/// Volume term int_{B1} h for closed-form terms.
inline double volume_terms(const BasisPtr& basis, const std::vector<PowerTerm>& terms) {
  const int d = basis->dim();
  double v = 0.0;
  for (const PowerTerm& t : terms)
    if (t.mode == 0) v += t.coef / (d + 2.0 + t.exponent);
  return v * std::sqrt(basis->surface_area());
}

/// sum_j c_j^2 ((lambda_j - 2d) + eps_j^2) / (d + 2 + 2 eps_j).
inline double W0_homog(const Trace& c, const std::vector<double>& eps) {
  if (eps.size() != c.size()) throw PreconditionError("W0_homog: exponent count mismatch");
  const int d = c.basis->dim();
  double s = 0.0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (eps[j] < 0.0) throw PreconditionError("W0_homog: negative exponent");
    const double lam = c.basis->mode(j).lambda;
    s += c[j] * c[j] * ((lam - 2.0 * d) + eps[j] * eps[j]) / (d + 2.0 + 2.0 * eps[j]);
  }
  return s;
}

inline double W0_homog(const Trace& c, double eps = 0.0) {
  return W0_homog(c, std::vector<double>(c.size(), eps));
}

/// W of the 2-homogeneous extension r^2 c, i.e. F(c)/(d+2).
inline double W_of_homogeneous(const Trace& c) { return F_of(c) / (c.basis->dim() + 2.0); }

/// Radial slicing identity:
///   W(r^2 u) = int_0^1 F(u(r)) r^{d+1} dr + int_0^1 r^{d+3} ||d_r u||^2 dr.
inline double slicing_W(const RadialProfileField& f, int nodes_per_piece = 64) {
  const int d = f.basis->dim();
  std::vector<double> br{0.0};
  for (double b : f.breaks)
    if (b > 0.0 && b < 1.0) br.push_back(b);
  br.push_back(1.0);
  std::sort(br.begin(), br.end());
  const QuadratureRule rule = composite_gauss_legendre(nodes_per_piece, br);
  std::vector<double> a, da;
  double s = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double r = rule.nodes[i];
    f.eval(r, a, da);
    const Trace u(f.basis, a), du(f.basis, da);
    s += rule.weights[i] * (F_of(u) * std::pow(r, d + 1) + std::pow(r, d + 3) * norm2(du));
  }
  return s;
}

// ---------------------------------------------------------------------------
// Volumetric oracle

/// h = r^2 u sampled on uniform shells r_i = i / n_shells (including r = 0) times
/// the sphere quadrature nodes.
struct PolarField {
  BasisPtr basis;
  std::vector<double> radii;
  std::vector<std::vector<double>> values;  // [shell][node]
};

inline PolarField sample_polar(const RadialProfileField& f, int n_shells = 128) {
  PolarField p{f.basis, {}, {}};
  std::vector<double> a, da;
  for (int i = 0; i <= n_shells; ++i) {
    const double r = static_cast<double>(i) / n_shells;
    f.eval(r, a, da);
    std::vector<double> v = synthesize(Trace(f.basis, a));
    for (double& x : v) x *= r * r;
    p.radii.push_back(r);
    p.values.push_back(std::move(v));
  }
  return p;
}

struct EnergyReport {
  double w0 = 0.0;
  double w = 0.0;
  double f = 0.0;
  double gap = 0.0;
  std::vector<std::pair<std::size_t, double>> per_mode;
};

namespace detail {

// Fourth-order finite differences on a uniform grid, one-sided near the ends.
inline std::vector<double> fd_derivative(const std::vector<double>& y, double h) {
  const std::size_t n = y.size();
  std::vector<double> d(n, 0.0);
  if (n < 5) throw PreconditionError("fd_derivative: need at least 5 points");
  for (std::size_t i = 0; i < n; ++i) {
    if (i >= 2 && i + 2 < n) {
      d[i] = (y[i - 2] - 8 * y[i - 1] + 8 * y[i + 1] - y[i + 2]) / (12 * h);
    } else if (i < 2) {
      const std::size_t b = 0;
      const double c[5][5] = {{-25, 48, -36, 16, -3}, {-3, -10, 18, -6, 1}};
      const double* w = c[i - b];
      double s = 0.0;
      for (int k = 0; k < 5; ++k) s += w[k] * y[b + k];
      d[i] = s / (12 * h);
    } else {
      const std::size_t b = n - 5;
      const double c[2][5] = {{-1, 6, -18, 10, 3}, {3, -16, 36, -48, 25}};
      const double* w = c[i - (n - 2)];
      double s = 0.0;
      for (int k = 0; k < 5; ++k) s += w[k] * y[b + k];
      d[i] = s / (12 * h);
    }
  }
  return d;
}

inline double simpson(const std::vector<double>& y, double h) {
  const std::size_t n = y.size() - 1;
  if (n % 2 != 0) throw PreconditionError("simpson: need an even number of intervals");
  double s = y[0] + y[n];
  for (std::size_t i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * y[i];
  return s * h / 3.0;
}

}  // namespace detail

/// Direct quadrature of W0(h) = int |grad h|^2 - 2 int_{dB} h^2 and W = W0 + int h.
inline EnergyReport W_volumetric(const PolarField& p, double W_S = 0.0) {
  const std::size_t ns = p.radii.size();
  if (ns < 17) throw PreconditionError("W_volumetric: grid too coarse (fewer than 16 radial intervals)");
  const SphereBasis& b = *p.basis;
  const int d = b.dim();
  const std::size_t nq = b.node_count(), m = b.size();
  const double h = p.radii[1] - p.radii[0];
  const auto w = b.weights();

  std::vector<Trace> shells;
  shells.reserve(ns);
  for (const auto& v : p.values) shells.push_back(analyze(v, p.basis));

  std::vector<double> radial(ns, 0.0), angular(ns, 0.0), volume(ns, 0.0);
  std::vector<double> column(ns);
  for (std::size_t q = 0; q < nq; ++q) {
    for (std::size_t i = 0; i < ns; ++i) column[i] = p.values[i][q];
    const std::vector<double> dr = detail::fd_derivative(column, h);
    for (std::size_t i = 0; i < ns; ++i) {
      radial[i] += w[q] * dr[i] * dr[i];
      volume[i] += w[q] * column[i];
    }
  }
  std::vector<double> grad_integrand(ns), vol_integrand(ns);
  for (std::size_t i = 0; i < ns; ++i) {
    const double r = p.radii[i];
    const double rd = std::pow(r, d - 1);
    angular[i] = r > 0.0 ? dirichlet_energy(shells[i]) / (r * r) : 0.0;
    grad_integrand[i] = rd * (radial[i] + angular[i]);
    vol_integrand[i] = rd * volume[i];
  }
  double boundary = 0.0;
  for (std::size_t q = 0; q < nq; ++q) boundary += w[q] * p.values.back()[q] * p.values.back()[q];

  EnergyReport rep;
  rep.w0 = detail::simpson(grad_integrand, h) - 2.0 * boundary;
  rep.w = rep.w0 + detail::simpson(vol_integrand, h);
  rep.f = F_of(shells.back());
  rep.gap = rep.w - W_S;

  // spectral per-mode shares of W0
  std::vector<double> cj(ns), integrand(ns);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t i = 0; i < ns; ++i) cj[i] = shells[i][j];
    const std::vector<double> dcj = detail::fd_derivative(cj, h);
    const double lam = b.mode(j).lambda;
    for (std::size_t i = 0; i < ns; ++i) {
      const double r = p.radii[i];
      integrand[i] = std::pow(r, d - 1) * (dcj[i] * dcj[i] + (r > 0.0 ? lam * cj[i] * cj[i] / (r * r) : 0.0));
    }
    rep.per_mode.emplace_back(j, detail::simpson(integrand, h) - 2.0 * cj.back() * cj.back());
  }
  return rep;
}

inline double per_mode_total(const EnergyReport& rep) {
  double s = 0.0;
  for (const auto& [j, v] : rep.per_mode) s += v;
  return s;
}

/// Spectral energy report of a closed-form field.
inline EnergyReport spectral_report(const RadialProfileField& f, double W_S = 0.0) {
  if (!f.closed_form()) throw PreconditionError("spectral_report: closed-form profile required");
  EnergyReport rep;
  std::vector<double> shares;
  rep.w0 = W0_terms(f.basis, f.terms, &shares);
  rep.w = rep.w0 + volume_terms(f.basis, f.terms);
  rep.f = F_of(f.boundary());
  rep.gap = rep.w - W_S;
  for (std::size_t j = 0; j < shares.size(); ++j) rep.per_mode.emplace_back(j, shares[j]);
  return rep;
}

// ---------------------------------------------------------------------------
// Reparametrized slicing along a flow

struct ReparamResult {
  double form_integral = 0.0;  // (1/k) int F(phi) e^{-ct/k} + k int |phi'|^2 e^{-ct/k}
  double form_dissipation = 0.0;  // F(psi0)/c + int (gradF . psi'/c + k |psi'|^2) e^{-ct/k}
};

/// Energy of h = r^alpha phi(-kappa ln r) with phi the flow stopped at T, in both
/// forms; rate = 2 alpha + d - 2 (d + 2 for the obstacle problem).
inline ReparamResult reparam_W_forms(const FlowTrajectory& traj, double kappa, double T, double rate,
                                     double C_SL = 1.0, int nodes_per_piece = 32) {
  if (!(kappa > 0.0)) throw PreconditionError("reparam_W: kappa must be positive");
  if (T < 0.0) throw PreconditionError("reparam_W: negative stopping time");
  if (!traj.closed_form() && T > traj.t_end() * (1.0 + 1e-12))
    throw PreconditionError("reparam_W: trajectory shorter than T");
  ReparamResult out;
  const Trace psi0 = traj.state_at(0.0);
  const Trace psiT = traj.state_at(T);
  double i_F = 0.0, i_kin = 0.0, i_grad = 0.0;
  if (T > 0.0) {
    const QuadratureRule rule = composite_gauss_legendre(nodes_per_piece, traj.breaks(T));
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
      const double t = rule.nodes[i];
      const double e = std::exp(-rate * t / kappa) * rule.weights[i];
      const Trace psi = traj.state_at(t), dpsi = traj.derivative_at(t);
      i_F += e * F_of(psi);
      i_kin += e * norm2(dpsi);
      i_grad += e * dot(gradF_of(psi), dpsi);
    }
  }
  const double tail = F_of(psiT) * std::exp(-rate * T / kappa) / rate;
  out.form_integral = i_F / kappa + tail + C_SL * kappa * i_kin;
  out.form_dissipation = F_of(psi0) / rate + i_grad / rate + C_SL * kappa * i_kin;
  return out;
}

/// W of the reparametrized competitor; both forms are computed and must agree.
inline double reparam_W(const FlowTrajectory& traj, double kappa, double T, double rel_tol = 1e-6) {
  const double rate = traj.basis->dim() + 2.0;
  const ReparamResult r = reparam_W_forms(traj, kappa, T, rate);
  const double scale = std::max({1.0, std::abs(r.form_integral), std::abs(r.form_dissipation)});
  if (std::abs(r.form_integral - r.form_dissipation) > rel_tol * scale)
    throw ConsistencyError("reparam_W: integral and dissipation forms disagree");
  return r.form_dissipation;
}

/// The field u(r) = phi(-kappa ln r) for the flow stopped at T.
inline RadialProfileField reparametrized_field(const FlowTrajectory& traj, double kappa, double T) {
  RadialProfileField f{traj.basis, {}, {}, {}};
  const Trace stopped = traj.state_at(T);
  f.sampled = [traj, kappa, T, stopped](double r, std::vector<double>& a, std::vector<double>& da) {
    const double t = r > 0.0 ? -kappa * std::log(r) : std::numeric_limits<double>::infinity();
    if (t >= T) {
      a = stopped.coeffs;
      std::fill(da.begin(), da.end(), 0.0);
      return;
    }
    a = traj.state_at(t).coeffs;
    const Trace dpsi = traj.derivative_at(t);
    for (std::size_t j = 0; j < a.size(); ++j) da[j] = -kappa / r * dpsi[j];
  };
  for (double t : traj.breaks(T)) {
    const double r = std::exp(-t / kappa);
    if (r > 0.0 && r < 1.0) f.breaks.push_back(r);
  }
  return f;
}

// ---------------------------------------------------------------------------
// Mode-class decomposition of W(z) - W(Q)

struct ClassEnergies {
  double minus = 0.0;  // W0(z_-)
  double zero = 0.0;   // W0(z_0)
  double plus = 0.0;   // W0(z_+)
  double total() const { return minus + zero + plus; }
};

inline ClassEnergies class_energies(const Trace& perturbation) {
  ClassEnergies e;
  const int d = perturbation.basis->dim();
  for (std::size_t j = 0; j < perturbation.size(); ++j) {
    const double lam = perturbation.basis->mode(j).lambda;
    const double v = perturbation[j] * perturbation[j] * (lam - 2.0 * d) / (d + 2.0);
    const int deg = perturbation.basis->mode(j).degree;
    (deg < 2 ? e.minus : deg == 2 ? e.zero : e.plus) += v;
  }
  return e;
}

}  // namespace logepi
