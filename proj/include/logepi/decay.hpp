#pragma once

// Energy decay e' = -C e^{1+gamma} and the dyadic telescoping over r_n = exp(-2^n)
// that turns it into a logarithmic convergence rate of blow-up traces.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "logepi/errors.hpp"
#include "logepi/trace.hpp"

namespace logepi {

struct DecaySeries {
  double e0 = 0.0, gamma = 0.0, C = 0.0;
  std::vector<double> t;
  std::vector<double> e;
  std::vector<double> bound;
  double fitted_exponent = 0.0;  // slope of log e against log t on the fit window

  void write_csv(std::ostream& os) const {
    os << "t,e,bound\n";
    os.precision(17);
    for (std::size_t i = 0; i < t.size(); ++i) os << t[i] << ',' << e[i] << ',' << bound[i] << '\n';
  }
};

/// (e0^{-gamma} + t gamma C)^{-1/gamma}
inline double decay_bound(double e0, double gamma, double C, double t) {
  return std::pow(std::pow(e0, -gamma) + t * gamma * C, -1.0 / gamma);
}

/// Least-squares slope of log y against log x over x in [lo, hi].
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y, double lo, double hi) {
  double n = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lo || x[i] > hi || !(y[i] > 0.0)) continue;
    const double a = std::log(x[i]), b = std::log(y[i]);
    n += 1;
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
  }
  if (n < 2) throw PreconditionError("loglog_slope: fewer than two points in the window");
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

/// t = 0 followed by log-spaced times on [1e-2, t_end].
inline std::vector<double> decay_times(double t_end = 1e4, int per_decade = 40) {
  std::vector<double> t{0.0};
  const int m = static_cast<int>(std::ceil((std::log10(t_end) + 2.0) * per_decade));
  for (int i = 0; i <= m; ++i) t.push_back(std::min(t_end, std::pow(10.0, -2.0 + static_cast<double>(i) / per_decade)));
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return t;
}

/// Adaptive Dormand-Prince integration of e' = -C e^{1+gamma}; slope fitted on [fit_lo, fit_hi].
inline DecaySeries decay_simulator(double e0, double gamma, double C, std::vector<double> times = decay_times(),
                                   double fit_lo = 1e2, double fit_hi = 1e4) {
  if (!(e0 > 0.0)) throw PreconditionError("decay_simulator: e0 must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw PreconditionError("decay_simulator: gamma must lie in (0, 1)");
  if (!(C > 0.0)) throw PreconditionError("decay_simulator: C must be positive");
  if (times.empty() || times.front() != 0.0 || !std::is_sorted(times.begin(), times.end()))
    throw PreconditionError("decay_simulator: times must start at 0 and increase");
  namespace ode = boost::numeric::odeint;
  using State = std::vector<double>;
  DecaySeries s;
  s.e0 = e0;
  s.gamma = gamma;
  s.C = C;
  // log e keeps the relative accuracy uniform as e decays by many orders
  auto rhs = [&](const State& y, State& dy, double) { dy[0] = -C * std::exp(gamma * y[0]); };
  State y{std::log(e0)};
  auto stepper = ode::make_dense_output(1e-14, 1e-13, ode::runge_kutta_dopri5<State>());
  ode::integrate_times(stepper, rhs, y, times.begin(), times.end(), 1e-3, [&](const State& v, double t) {
    s.t.push_back(t);
    s.e.push_back(std::exp(v[0]));
    s.bound.push_back(decay_bound(e0, gamma, C, t));
  });
  if (s.t.size() > 1 && fit_hi > fit_lo) {
    try {
      s.fitted_exponent = loglog_slope(s.t, s.e, fit_lo, fit_hi);
    } catch (const PreconditionError&) {
      s.fitted_exponent = 0.0;
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Dyadic rate

/// r_n = exp(-2^n); n may be negative when the grid does not resolve small radii.
inline double dyadic_radius(int n) { return std::exp(-std::ldexp(1.0, n)); }

struct DyadicRate {
  double target = 0.0;           // (1 - gamma) / (2 gamma)
  double fitted = 0.0;           // -slope of |u_{r_n} - u0| against t_n = 2^n
  double sigma = 0.0;            // 2^{-target}
  double C_over_Ca = 0.0;        // given, or the smallest value with |du_n| <= (C/C_a)^{1/2} sigma^n
  double cauchy_constant = 0.0;  // (C/C_a)^{1/2} / (1 - sigma)
  Trace u0;
  std::vector<double> increments;  // |u_{r_{n+1}} - u_{r_n}|
  std::vector<double> distances;   // |u_{r_n} - u0|
  bool telescoping = false;        // |u_m - u_n| <= sum of increments, all pairs
  bool geometric = false;          // |u_m - u_n| <= cauchy_constant sigma^n, all pairs
};

/// family[k] is the trace at r_{n0 + k}. C_over_Ca <= 0 means: measure it from the increments.
inline DyadicRate dyadic_rate(const std::vector<Trace>& family, int n0, double gamma, double C_over_Ca = 0.0) {
  if (family.size() < 4) throw PreconditionError("dyadic_rate: need at least 4 dyadic scales");
  if (!(gamma > 0.0 && gamma < 1.0)) throw PreconditionError("dyadic_rate: gamma must lie in (0, 1)");
  DyadicRate out;
  out.target = (1.0 - gamma) / (2.0 * gamma);
  out.sigma = std::pow(2.0, -out.target);
  const std::size_t m = family.size();
  for (std::size_t k = 0; k + 1 < m; ++k) out.increments.push_back(norm(family[k + 1] - family[k]));

  // vector Aitken on the last two increments; exact for geometric tails
  const double d1 = out.increments[m - 3], d2 = out.increments[m - 2];
  out.u0 = family.back();
  if (d1 > 0.0 && d2 < d1) {
    const double rho = d2 / d1;
    out.u0 += (rho / (1.0 - rho)) * (family[m - 1] - family[m - 2]);
  }
  std::vector<double> tn;
  for (std::size_t k = 0; k < m; ++k) {
    out.distances.push_back(norm(family[k] - out.u0));
    tn.push_back(std::ldexp(1.0, n0 + static_cast<int>(k)));
  }
  // the extrapolated limit makes the last distance unreliable; fit on the rest
  std::vector<double> ft(tn.begin(), tn.end() - 1), fd(out.distances.begin(), out.distances.end() - 1);
  out.fitted = -loglog_slope(ft, fd, 0.0, 1e300);

  if (C_over_Ca > 0.0) {
    out.C_over_Ca = C_over_Ca;
  } else {
    for (std::size_t k = 0; k + 1 < m; ++k)
      out.C_over_Ca =
          std::max(out.C_over_Ca, std::pow(out.increments[k] / std::pow(out.sigma, n0 + static_cast<int>(k)), 2));
  }
  out.cauchy_constant = std::sqrt(out.C_over_Ca) / (1.0 - out.sigma);
  out.telescoping = out.geometric = true;
  for (std::size_t a = 0; a < m; ++a) {
    double partial = 0.0;
    for (std::size_t b = a + 1; b < m; ++b) {
      partial += out.increments[b - 1];
      const double gap = norm(family[b] - family[a]);
      const double slack = 1e-12 * std::max(1.0, partial);
      if (gap > partial + slack) out.telescoping = false;
      if (partial > out.cauchy_constant * std::pow(out.sigma, n0 + static_cast<int>(a)) + slack) out.geometric = false;
    }
  }
  return out;
}

}  // namespace logepi
