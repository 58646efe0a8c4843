#pragma once

// The set S of quadratic blow-ups x . A x (A >= 0, tr A = 1/4) and the
// L2(sphere) projection onto it.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "logepi/errors.hpp"
#include "logepi/functional.hpp"
#include "logepi/trace.hpp"

namespace logepi {

constexpr double kBlowupTrace = 0.25;

struct QuadraticBlowup {
  Eigen::MatrixXd A;

  int dim() const { return static_cast<int>(A.rows()); }

  /// Throws unless A is symmetric, PSD and has trace 1/4 (tolerance tol).
  void validate(double tol = 1e-12) const {
    if (A.rows() != A.cols() || (A.rows() != 2 && A.rows() != 3))
      throw PreconditionError("QuadraticBlowup: matrix must be 2x2 or 3x3");
    if ((A - A.transpose()).cwiseAbs().maxCoeff() > tol)
      throw PreconditionError("QuadraticBlowup: matrix is not symmetric");
    if (std::abs(A.trace() - kBlowupTrace) > tol)
      throw PreconditionError("QuadraticBlowup: trace " + std::to_string(A.trace()) + " != 1/4");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
    if (es.eigenvalues().minCoeff() < -tol)
      throw PreconditionError("QuadraticBlowup: matrix is not positive semidefinite");
  }

  double operator()(const Point& x) const {
    double s = 0.0;
    for (int i = 0; i < dim(); ++i)
      for (int k = 0; k < dim(); ++k) s += x[i] * A(i, k) * x[k];
    return s;
  }
};

inline QuadraticBlowup isotropic_blowup(int d) {
  return {Eigen::MatrixXd::Identity(d, d) / (4.0 * d)};
}

/// Euclidean projection onto {x >= 0, sum x = target}; sort-based threshold.
inline std::vector<double> simplex_project(const std::vector<double>& v, double target = kBlowupTrace) {
  if (v.empty()) return {};
  std::vector<double> u(v);
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0, tau = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumulative += u[k];
    const double t = (cumulative - target) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) tau = t;
  }
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::max(v[i] - tau, 0.0);
  return out;
}

/// Q_A restricted to the sphere; only degree-0 and degree-2 coefficients are set.
inline Trace eval_on_sphere(const QuadraticBlowup& q, const BasisPtr& basis) {
  if (q.dim() != basis->dim()) throw PreconditionError("eval_on_sphere: dimension mismatch");
  const int d = basis->dim();
  Trace t(basis);
  t[0] = q.A.trace() / d * std::sqrt(basis->surface_area());
  const Eigen::MatrixXd traceless = q.A - Eigen::MatrixXd::Identity(d, d) * (q.A.trace() / d);
  const double kd = basis->surface_area() * 2.0 / (d * (d + 2.0));
  for (std::size_t j : basis->modes_of_degree(2)) {
    const auto& B = basis->quadratic_form(j);
    // <x.Cx, x.Bx> = k_d tr(CB) for traceless C, B; phi_j = x.B_j x has unit norm.
    double tr = 0.0;
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) tr += traceless(r, c) * B[c * 3 + r];
    t[j] = kd * tr;
  }
  return t;
}

/// k_d in <x.Bx, x.Cx>_{L2} = k_d tr(BC) for traceless symmetric B, C, by quadrature.
inline double isometry_constant(const SphereBasis& basis) {
  double s = 0.0;
  const auto w = basis.weights();
  for (std::size_t q = 0; q < basis.node_count(); ++q) {
    const Point& x = basis.nodes()[q];
    const double v = x[0] * x[0] - x[1] * x[1];
    s += w[q] * v * v;
  }
  return s / 2.0;
}

struct Projection {
  QuadraticBlowup blowup;
  double distance = 0.0;
  bool eigen_tie = false;  // two eigenvalues tied while clamped to the boundary
};

inline Projection project_to_S(const Trace& c) {
  const SphereBasis& b = *c.basis;
  const int d = b.dim();
  Eigen::MatrixXd M0 = Eigen::MatrixXd::Identity(d, d) / (4.0 * d);
  for (std::size_t j : b.modes_of_degree(2)) {
    const auto& B = b.quadratic_form(j);
    for (int r = 0; r < d; ++r)
      for (int k = 0; k < d; ++k) M0(r, k) += c[j] * B[r * 3 + k];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M0);
  const Eigen::VectorXd ev = es.eigenvalues();
  std::vector<double> lam(ev.data(), ev.data() + d);
  const std::vector<double> proj = simplex_project(lam);
  Eigen::VectorXd pv(d);
  for (int i = 0; i < d; ++i) pv(i) = proj[i];
  Projection out;
  out.blowup.A = es.eigenvectors() * pv.asDiagonal() * es.eigenvectors().transpose();
  out.blowup.A = 0.5 * (out.blowup.A + out.blowup.A.transpose());
  for (int i = 0; i < d; ++i)
    for (int k = i + 1; k < d; ++k)
      if (std::abs(lam[i] - lam[k]) < 1e-10 && (proj[i] == 0.0 || proj[k] == 0.0)) out.eigen_tie = true;
  out.distance = norm(c - eval_on_sphere(out.blowup, c.basis));
  return out;
}

struct ReferenceEnergies {
  int dim = 2;
  double F_S = 0.0;
  double W_S = 0.0;
};

inline ReferenceEnergies reference_energies(int d, int max_degree = 3) {
  const BasisPtr basis = build_basis(d, max_degree);
  const double F = F_of(eval_on_sphere(isotropic_blowup(d), basis));
  return {d, F, F / (d + 2.0)};
}

inline ReferenceEnergies reference_energies(const BasisPtr& basis) {
  const int d = basis->dim();
  const double F = F_of(eval_on_sphere(isotropic_blowup(d), basis));
  return {d, F, F / (d + 2.0)};
}

}  // namespace logepi
