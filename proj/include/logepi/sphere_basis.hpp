#pragma once

// Real orthonormal eigenbases of the Laplace-Beltrami operator on the unit
// sphere of R^d, d in {2, 3}, together with product quadratures on the sphere.
//
//   d = 2 : {1/sqrt(2 pi), cos(k t)/sqrt(pi), sin(k t)/sqrt(pi)}, lambda = k^2,
//           uniform trapezoid rule in the angle t.
//   d = 3 : real spherical harmonics Y_lm, lambda = l(l+1),
//           Gauss-Legendre in cos(theta) x uniform azimuth.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "logepi/errors.hpp"
#include "logepi/quadrature.hpp"

namespace logepi {

using Point = std::array<double, 3>;

struct Mode {
  int degree = 0;     // homogeneity alpha_j of the harmonic extension
  int order = 0;      // d=2: +k for cos, -k for sin; d=3: m in [-l, l]
  double lambda = 0;  // alpha_j (alpha_j + d - 2)
};

inline double laplace_eigenvalue(int degree, int dim) {
  return static_cast<double>(degree) * (degree + dim - 2);
}

inline double unit_sphere_area(int dim) {
  return dim == 2 ? 2.0 * std::numbers::pi : 4.0 * std::numbers::pi;
}

class SphereBasis {
 public:
  SphereBasis(int dim, int max_degree, int quadrature_oversampling = 1)
      : dim_(dim), max_degree_(max_degree) {
    if (dim != 2 && dim != 3) {
      throw PreconditionError("build_basis: unsupported dimension " + std::to_string(dim) +
                              " (only d = 2 and d = 3 are supported)");
    }
    if (max_degree < 2) {
      throw PreconditionError("build_basis: max degree must be at least 2");
    }
    if (quadrature_oversampling < 1) {
      throw PreconditionError("build_basis: quadrature oversampling must be >= 1");
    }
    build_modes();
    build_quadrature(quadrature_oversampling);
    synthesis_.resize(nodes_.size() * modes_.size());
    for (std::size_t q = 0; q < nodes_.size(); ++q) {
      const std::vector<double> row = evaluate(nodes_[q]);
      for (std::size_t j = 0; j < modes_.size(); ++j) synthesis_[q * modes_.size() + j] = row[j];
    }
    build_quadratic_forms();
  }

  int dim() const { return dim_; }
  int max_degree() const { return max_degree_; }
  std::size_t size() const { return modes_.size(); }
  std::span<const Mode> modes() const { return modes_; }
  const Mode& mode(std::size_t j) const { return modes_[j]; }

  std::size_t node_count() const { return nodes_.size(); }
  std::span<const Point> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }

  /// phi_j evaluated at quadrature node q.
  double phi(std::size_t q, std::size_t j) const { return synthesis_[q * modes_.size() + j]; }
  std::span<const double> phi_row(std::size_t q) const {
    return {synthesis_.data() + q * modes_.size(), modes_.size()};
  }

  double surface_area() const { return unit_sphere_area(dim_); }
  double max_eigenvalue() const { return laplace_eigenvalue(max_degree_, dim_); }

  /// All basis functions at a unit vector x (the third component is ignored for d = 2).
  std::vector<double> evaluate(const Point& x) const {
    std::vector<double> out(modes_.size());
    if (dim_ == 2) {
      eval_circle(std::atan2(x[1], x[0]), out);
    } else {
      const double z = std::clamp(x[2], -1.0, 1.0);
      eval_sphere(std::acos(z), std::atan2(x[1], x[0]), out);
    }
    return out;
  }

  /// Symmetric d x d matrix B_j (row-major, padded to 3 x 3) with phi_j(x) = x . B_j x
  /// on the sphere; defined for the degree-2 modes, zero for the others.
  const std::array<double, 9>& quadratic_form(std::size_t j) const { return forms_[j]; }

  std::vector<std::size_t> modes_of_degree(int degree) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < modes_.size(); ++j)
      if (modes_[j].degree == degree) out.push_back(j);
    return out;
  }

  static Point from_angle(double t) { return {std::cos(t), std::sin(t), 0.0}; }
  static Point from_spherical(double theta, double phi) {
    return {std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
  }

 private:
  void build_modes() {
    modes_.push_back({0, 0, 0.0});
    for (int k = 1; k <= max_degree_; ++k) {
      const double lam = laplace_eigenvalue(k, dim_);
      if (dim_ == 2) {
        modes_.push_back({k, k, lam});
        modes_.push_back({k, -k, lam});
      } else {
        for (int m = -k; m <= k; ++m) modes_.push_back({k, m, lam});
      }
    }
  }

  void build_quadrature(int oversampling) {
    const double pi = std::numbers::pi;
    if (dim_ == 2) {
      const int n = oversampling * (4 * max_degree_ + 1);
      for (int q = 0; q < n; ++q) {
        nodes_.push_back(from_angle(2.0 * pi * q / n));
        weights_.push_back(2.0 * pi / n);
      }
      return;
    }
    const int n_theta = oversampling * (2 * max_degree_ + 1);
    const int n_phi = oversampling * (2 * max_degree_ + 2);
    const QuadratureRule gl = gauss_legendre(n_theta);
    for (int a = 0; a < n_theta; ++a) {
      const double theta = std::acos(gl.nodes[a]);
      for (int b = 0; b < n_phi; ++b) {
        nodes_.push_back(from_spherical(theta, 2.0 * pi * b / n_phi));
        weights_.push_back(gl.weights[a] * 2.0 * pi / n_phi);
      }
    }
  }

  void eval_circle(double t, std::vector<double>& out) const {
    const double pi = std::numbers::pi;
    out[0] = 1.0 / std::sqrt(2.0 * pi);
    const double s = 1.0 / std::sqrt(pi);
    for (int k = 1; k <= max_degree_; ++k) {
      out[2 * k - 1] = s * std::cos(k * t);
      out[2 * k] = s * std::sin(k * t);
    }
  }

  // Orthonormal associated Legendre recurrences (no Condon-Shortley phase).
  void eval_sphere(double theta, double phi, std::vector<double>& out) const {
    const int L = max_degree_;
    const double x = std::cos(theta), sx = std::sin(theta);
    std::vector<double> p((L + 1) * (L + 1), 0.0);
    auto P = [&](int l, int m) -> double& { return p[l * (L + 1) + m]; };
    P(0, 0) = 1.0 / std::sqrt(4.0 * std::numbers::pi);
    for (int m = 1; m <= L; ++m) P(m, m) = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * sx * P(m - 1, m - 1);
    for (int m = 0; m < L; ++m) P(m + 1, m) = std::sqrt(2.0 * m + 3.0) * x * P(m, m);
    for (int m = 0; m <= L; ++m) {
      for (int l = m + 2; l <= L; ++l) {
        const double a = std::sqrt((4.0 * l * l - 1.0) / (static_cast<double>(l) * l - m * m));
        const double b = std::sqrt(((l - 1.0) * (l - 1.0) - m * m) / (4.0 * (l - 1.0) * (l - 1.0) - 1.0));
        P(l, m) = a * (x * P(l - 1, m) - b * P(l - 2, m));
      }
    }
    std::size_t j = 0;
    for (int l = 0; l <= L; ++l) {
      for (int m = -l; m <= l; ++m, ++j) {
        if (m == 0) {
          out[j] = P(l, 0);
        } else if (m > 0) {
          out[j] = std::numbers::sqrt2 * P(l, m) * std::cos(m * phi);
        } else {
          out[j] = std::numbers::sqrt2 * P(l, -m) * std::sin(-m * phi);
        }
      }
    }
  }

  // Solve for the traceless symmetric matrix of each degree-2 mode by projecting
  // a basis of traceless symmetric matrices through the quadrature.
  void build_quadratic_forms() {
    forms_.assign(modes_.size(), std::array<double, 9>{});
    const std::vector<std::size_t> deg2 = modes_of_degree(2);
    std::vector<std::array<double, 9>> mats;
    const int d = dim_;
    for (int i = 0; i + 1 < d; ++i) {  // diagonal: e_i e_i^T - e_{i+1} e_{i+1}^T
      std::array<double, 9> e{};
      e[i * 3 + i] = 1.0;
      e[(i + 1) * 3 + (i + 1)] = -1.0;
      mats.push_back(e);
    }
    for (int i = 0; i < d; ++i)
      for (int k = i + 1; k < d; ++k) {
        std::array<double, 9> e{};
        e[i * 3 + k] = e[k * 3 + i] = 1.0;
        mats.push_back(e);
      }
    const std::size_t n = deg2.size();  // equals mats.size()
    // G(a, b) = <x . E_b x, phi_{deg2[a]}>
    std::vector<double> G(n * n, 0.0);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t q = 0; q < nodes_.size(); ++q) {
        const Point& x = nodes_[q];
        double v = 0.0;
        for (int r = 0; r < 3; ++r)
          for (int c = 0; c < 3; ++c) v += x[r] * mats[b][r * 3 + c] * x[c];
        for (std::size_t a = 0; a < n; ++a) G[a * n + b] += weights_[q] * v * phi(q, deg2[a]);
      }
    }
    // phi_{deg2[a]} = sum_b (G^{-1})_{b a} x . E_b x ; invert G by Gauss-Jordan (n <= 5).
    std::vector<double> inv(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) inv[i * n + i] = 1.0;
    for (std::size_t col = 0; col < n; ++col) {
      std::size_t piv = col;
      for (std::size_t r = col + 1; r < n; ++r)
        if (std::abs(G[r * n + col]) > std::abs(G[piv * n + col])) piv = r;
      for (std::size_t c = 0; c < n; ++c) {
        std::swap(G[col * n + c], G[piv * n + c]);
        std::swap(inv[col * n + c], inv[piv * n + c]);
      }
      const double d0 = G[col * n + col];
      for (std::size_t c = 0; c < n; ++c) {
        G[col * n + c] /= d0;
        inv[col * n + c] /= d0;
      }
      for (std::size_t r = 0; r < n; ++r) {
        if (r == col) continue;
        const double f = G[r * n + col];
        for (std::size_t c = 0; c < n; ++c) {
          G[r * n + c] -= f * G[col * n + c];
          inv[r * n + c] -= f * inv[col * n + c];
        }
      }
    }
    for (std::size_t a = 0; a < n; ++a) {
      std::array<double, 9> B{};
      for (std::size_t b = 0; b < n; ++b)
        for (int e = 0; e < 9; ++e) B[e] += inv[b * n + a] * mats[b][e];
      forms_[deg2[a]] = B;
    }
  }

  int dim_;
  int max_degree_;
  std::vector<Mode> modes_;
  std::vector<Point> nodes_;
  std::vector<double> weights_;
  std::vector<double> synthesis_;
  std::vector<std::array<double, 9>> forms_;
};

using BasisPtr = std::shared_ptr<const SphereBasis>;

/// Basis factory with the artifact's preconditions (L >= 3 so at least one
/// mode has homogeneity above 2).
inline BasisPtr build_basis(int dim, int max_degree, int quadrature_oversampling = 1) {
  if (dim != 2 && dim != 3) {
    throw PreconditionError("build_basis: unsupported dimension " + std::to_string(dim));
  }
  if (max_degree < 3) {
    throw PreconditionError("build_basis: max degree L = " + std::to_string(max_degree) +
                            " too small (need L >= 3)");
  }
  return std::make_shared<const SphereBasis>(dim, max_degree, quadrature_oversampling);
}

}  // namespace logepi
