#pragma once

// Finite-difference obstacle problem on [-1, 1]^2: projected SOR for the 5-point
// scheme of min int |grad u|^2 + u over u >= 0, blow-up rescaling onto the polar
// grid of the energy module, and Weiss series.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <ostream>
#include <string>
#include <vector>

#include "logepi/energy.hpp"
#include "logepi/errors.hpp"
#include "logepi/trace.hpp"

namespace logepi {

struct GridField {
  int n = 0;  // intervals per side, h = 2 / n
  std::vector<double> u;  // (n+1)^2 nodal values, row-major in (i, j) with x = -1 + i h
  int sweeps = 0;
  double residual = 0.0;  // complementarity residual at exit
  std::vector<double> energy_history;

  double h() const { return 2.0 / n; }
  double x(int i) const { return -1.0 + i * h(); }
  double& at(int i, int j) { return u[static_cast<std::size_t>(i) * (n + 1) + j]; }
  double at(int i, int j) const { return u[static_cast<std::size_t>(i) * (n + 1) + j]; }

  /// Bilinear interpolation; throws outside the square.
  double interpolate(double px, double py) const {
    const double hh = h();
    const double s = (px + 1.0) / hh, t = (py + 1.0) / hh;
    if (s < -1e-9 || t < -1e-9 || s > n + 1e-9 || t > n + 1e-9)
      throw PreconditionError("GridField: point outside the grid");
    const int i = std::clamp(static_cast<int>(s), 0, n - 1), j = std::clamp(static_cast<int>(t), 0, n - 1);
    const double a = s - i, b = t - j;
    return (1 - a) * (1 - b) * at(i, j) + a * (1 - b) * at(i + 1, j) + (1 - a) * b * at(i, j + 1) +
           a * b * at(i + 1, j + 1);
  }

  void write_csv(std::ostream& os) const {
    os << "i,j,x,y,u\n";
    os.precision(17);
    for (int i = 0; i <= n; ++i)
      for (int j = 0; j <= n; ++j) os << i << ',' << j << ',' << x(i) << ',' << x(j) << ',' << at(i, j) << '\n';
  }
};

using BoundaryData = std::function<double(double, double)>;

/// Over-relaxation factor of the model problem, 2 / (1 + sin(pi / n)).
inline double optimal_omega(int n) { return 2.0 / (1.0 + std::sin(std::numbers::pi / n)); }

/// Discrete functional sum_edges (u_i - u_j)^2 + h^2 sum_interior u_i.
inline double discrete_energy(const GridField& g) {
  double e = 0.0;
  const double h2 = g.h() * g.h();
  for (int i = 0; i <= g.n; ++i)
    for (int j = 0; j <= g.n; ++j) {
      if (i < g.n) e += std::pow(g.at(i + 1, j) - g.at(i, j), 2);
      if (j < g.n) e += std::pow(g.at(i, j + 1) - g.at(i, j), 2);
      if (i > 0 && j > 0 && i < g.n && j < g.n) e += h2 * g.at(i, j);
    }
  return e;
}

/// max over interior nodes of max(-u, -(L u), |u (L u)|) with L u = -Delta_h u + 1/2.
inline double complementarity_residual(const GridField& g) {
  const double ih2 = 1.0 / (g.h() * g.h());
  double r = 0.0;
  for (int i = 1; i < g.n; ++i)
    for (int j = 1; j < g.n; ++j) {
      const double u = g.at(i, j);
      const double lu = (4.0 * u - g.at(i - 1, j) - g.at(i + 1, j) - g.at(i, j - 1) - g.at(i, j + 1)) * ih2 + 0.5;
      r = std::max({r, -u, -lu, std::abs(u * lu)});
    }
  return r;
}

struct PsorOptions {
  double omega = 0.0;  // 0: optimal_omega(n)
  double tol = 1e-9;
  int max_sweeps = 200000;
  bool record_energy = false;
  const GridField* initial = nullptr;  // interior initial guess (default zero)
};

/// Projected SOR, Gauss-Seidel ordering; stops when the largest update is below tol
/// and the complementarity residual is below tol.
inline GridField psor_solve(const BoundaryData& g, int n, PsorOptions opt = {}) {
  if (n < 4) throw PreconditionError("psor_solve: need at least 4 intervals");
  if (opt.omega == 0.0) opt.omega = optimal_omega(n);
  if (!(opt.omega >= 1.0 && opt.omega < 2.0)) throw PreconditionError("psor_solve: omega must lie in [1, 2)");
  GridField f;
  f.n = n;
  f.u.assign(static_cast<std::size_t>(n + 1) * (n + 1), 0.0);
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j) {
      const bool boundary = i == 0 || j == 0 || i == n || j == n;
      if (boundary) {
        const double v = g(f.x(i), f.x(j));
        if (v < 0.0) throw PreconditionError("psor_solve: boundary data must be nonnegative");
        f.at(i, j) = v;
      } else if (opt.initial) {
        f.at(i, j) = std::max(0.0, opt.initial->at(i, j));
      }
    }
  const double q = 0.5 * f.h() * f.h();
  const double w = opt.omega;
  if (opt.record_energy) f.energy_history.push_back(discrete_energy(f));
  for (int sweep = 1; sweep <= opt.max_sweeps; ++sweep) {
    double change = 0.0;
    for (int i = 1; i < n; ++i) {
      double* row = &f.u[static_cast<std::size_t>(i) * (n + 1)];
      const double* up = row - (n + 1);
      const double* dn = row + (n + 1);
      for (int j = 1; j < n; ++j) {
        const double gs = 0.25 * (up[j] + dn[j] + row[j - 1] + row[j + 1] - q);
        const double v = std::max(0.0, row[j] + w * (gs - row[j]));
        change = std::max(change, std::abs(v - row[j]));
        row[j] = v;
      }
    }
    if (opt.record_energy) f.energy_history.push_back(discrete_energy(f));
    f.sweeps = sweep;
    // an update of size c moves -Delta_h u by about 4c / h^2
    if (change <= 0.125 * opt.tol * q || sweep == opt.max_sweeps) {
      f.residual = complementarity_residual(f);
      if (f.residual <= opt.tol) return f;
    }
  }
  f.residual = complementarity_residual(f);
  throw ConvergenceError("psor_solve: no convergence within " + std::to_string(opt.max_sweeps) + " sweeps");
}

// ---------------------------------------------------------------------------
// Blow-ups

/// Polar samples of u_r(y) = u(x0 + r y) / r^2 on the shells of the energy module.
inline PolarField blowup_rescale(const GridField& u, const std::array<double, 2>& x0, double r,
                                 const BasisPtr& basis, int n_shells = 64) {
  if (basis->dim() != 2) throw PreconditionError("blowup_rescale: the grid solver is two-dimensional");
  if (r < 4.0 * u.h()) throw PreconditionError("blowup_rescale: r is below 4h");
  if (std::abs(x0[0]) + r > 1.0 + 1e-12 || std::abs(x0[1]) + r > 1.0 + 1e-12)
    throw PreconditionError("blowup_rescale: ball leaves the grid");
  PolarField p{basis, {}, {}};
  for (int i = 0; i <= n_shells; ++i) {
    const double rho = static_cast<double>(i) / n_shells;
    std::vector<double> v;
    for (const Point& y : basis->nodes()) v.push_back(u.interpolate(x0[0] + r * rho * y[0], x0[1] + r * rho * y[1]) / (r * r));
    p.radii.push_back(rho);
    p.values.push_back(std::move(v));
  }
  return p;
}

inline Trace extract_trace(const PolarField& p) { return analyze(p.values.back(), p.basis); }

struct WeissPoint {
  double r = 0.0;
  double W = 0.0;
  double D = 0.0;  // int_{dB} |x . grad u_r - 2 u_r|^2
  Trace trace;
};

struct WeissSeries {
  std::vector<WeissPoint> points;  // increasing r
  double min_increment = 0.0;       // min_k W(r_{k+1}) - W(r_k)
  bool monotone(double slack) const { return min_increment >= -slack; }
};

/// int_{dB} |d_rho u_r - 2 u_r|^2 at rho = 1 from one-sided differences of the shells.
inline double homogeneity_defect(const PolarField& p) {
  const std::size_t ns = p.radii.size(), nq = p.basis->node_count();
  const double h = p.radii[1] - p.radii[0];
  const auto w = p.basis->weights();
  double s = 0.0;
  std::vector<double> col(ns);
  for (std::size_t q = 0; q < nq; ++q) {
    for (std::size_t i = 0; i < ns; ++i) col[i] = p.values[i][q];
    const double dr = detail::fd_derivative(col, h).back();
    s += w[q] * std::pow(dr - 2.0 * col.back(), 2);
  }
  return s;
}

inline WeissSeries weiss_series(const GridField& u, const std::array<double, 2>& x0, std::vector<double> rs,
                                const BasisPtr& basis, int n_shells = 64) {
  std::sort(rs.begin(), rs.end());
  WeissSeries out;
  out.min_increment = std::numeric_limits<double>::infinity();
  for (double r : rs) {
    const PolarField p = blowup_rescale(u, x0, r, basis, n_shells);
    WeissPoint pt;
    pt.r = r;
    pt.W = W_volumetric(p).w;
    pt.D = homogeneity_defect(p);
    pt.trace = extract_trace(p);
    if (!out.points.empty()) out.min_increment = std::min(out.min_increment, pt.W - out.points.back().W);
    out.points.push_back(std::move(pt));
  }
  return out;
}

/// Dyadic radii r_n = exp(-2^n) for n in [n_lo, n_hi], keeping r >= 4h.
inline std::vector<double> dyadic_radii(int n_lo, int n_hi, double h) {
  std::vector<double> r;
  for (int k = n_lo; k <= n_hi; ++k) {
    const double v = std::exp(-std::ldexp(1.0, k));
    if (v >= 4.0 * h) r.push_back(v);
  }
  return r;
}

}  // namespace logepi
