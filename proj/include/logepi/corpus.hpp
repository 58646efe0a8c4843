#pragma once

// Random admissible traces near S: Q_A plus per-degree-class perturbations, kept
// nonnegative by rejection (or by an additive lift) and within delta of S.

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "logepi/competitors.hpp"
#include "logepi/critical_set.hpp"
#include "logepi/energy.hpp"
#include "logepi/errors.hpp"
#include "logepi/trace.hpp"

namespace logepi {

enum class NonnegMode { Reject, Lift };

struct AmplitudeRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct CorpusSpec {
  std::uint64_t seed = 1;
  int count = 200;
  int dim = 2;
  int max_degree = 8;
  AmplitudeRange minus{0.0, 4e-3};
  AmplitudeRange zero{0.0, 4e-3};
  AmplitudeRange plus{1e-4, 6e-3};
  double bump_fraction = 0.25;  // share of traces built as degenerate Q plus a nonnegative bump
  double delta = 1e-2;
  NonnegMode nonneg = NonnegMode::Reject;
  int max_attempts = 100;  // per trace
};

struct CorpusEntry {
  std::string name;
  std::uint64_t seed = 0;
  std::string kind;  // "generic" or "bump"
  Trace trace;
  double distance = 0.0;
  double gap = 0.0;
  double nodal_min = 0.0;
};

struct Corpus {
  std::vector<CorpusEntry> entries;
  int attempts = 0;
  int rejected = 0;
};

/// Eigenvalues from a flat Dirichlet scaled to trace 1/4, random orthogonal frame.
inline QuadraticBlowup random_blowup(int d, std::mt19937_64& rng, int rank = -1) {
  std::gamma_distribution<double> g(1.0, 1.0);
  std::normal_distribution<double> n(0.0, 1.0);
  if (rank < 0) rank = d;
  Eigen::VectorXd ev = Eigen::VectorXd::Zero(d);
  double s = 0.0;
  for (int i = 0; i < rank; ++i) s += ev(i) = g(rng);
  ev *= kBlowupTrace / s;
  Eigen::MatrixXd G(d, d);
  for (int i = 0; i < d; ++i)
    for (int k = 0; k < d; ++k) G(i, k) = n(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(G);
  const Eigen::MatrixXd R = qr.householderQ();
  QuadraticBlowup q{R * ev.asDiagonal() * R.transpose()};
  q.A = 0.5 * (q.A + q.A.transpose());
  return q;
}

/// Random trace supported on the degrees accepted by pred, with L2 norm `amplitude`.
template <class Pred>
Trace random_class_perturbation(const BasisPtr& b, std::mt19937_64& rng, double amplitude, Pred pred) {
  std::normal_distribution<double> n(0.0, 1.0);
  Trace t(b);
  for (std::size_t j = 0; j < t.size(); ++j)
    if (pred(b->mode(j).degree)) t[j] = n(rng) / (1.0 + b->mode(j).degree);
  const double nn = norm(t);
  if (nn > 0.0) t *= amplitude / nn;
  return t;
}

/// ((1 + x.n)/2)^k, nonnegative and of degree k.
inline Trace bump_trace(const BasisPtr& b, const Point& n, int k) {
  std::vector<double> s;
  for (const Point& x : b->nodes()) s.push_back(std::pow(0.5 * (1.0 + x[0] * n[0] + x[1] * n[1] + x[2] * n[2]), k));
  return analyze(s, b);
}

inline Point random_direction(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Point p{n(rng), n(rng), d == 3 ? n(rng) : 0.0};
  const double r = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2]);
  for (double& v : p) v /= r;
  return p;
}

namespace detail {

inline Trace draw_candidate(const CorpusSpec& spec, const BasisPtr& b, std::mt19937_64& rng, bool bump) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto amp = [&](const AmplitudeRange& r) { return r.lo + (r.hi - r.lo) * u(rng); };
  if (bump) {
    const QuadraticBlowup q = random_blowup(spec.dim, rng, spec.dim - 1);
    std::uniform_int_distribution<int> kd(3, spec.max_degree);
    Trace t = bump_trace(b, random_direction(spec.dim, rng), kd(rng));
    const double a = amp(spec.plus) + amp(spec.minus);
    if (norm(t) > 0.0) t *= a / norm(t);
    return eval_on_sphere(q, b) + t;
  }
  const QuadraticBlowup q = random_blowup(spec.dim, rng);
  Trace c = eval_on_sphere(q, b);
  c += random_class_perturbation(b, rng, amp(spec.minus), [](int k) { return k < 2; });
  c += random_class_perturbation(b, rng, amp(spec.zero), [](int k) { return k == 2; });
  c += random_class_perturbation(b, rng, amp(spec.plus), [](int k) { return k > 2; });
  return c;
}

}  // namespace detail

inline std::uint64_t trace_seed(std::uint64_t seed, int index) {
  return seed * 1000003ULL + static_cast<std::uint64_t>(index) * 7919ULL + 17ULL;
}

inline Corpus generate_corpus(const CorpusSpec& spec) {
  const BasisPtr b = build_basis(spec.dim, spec.max_degree);
  const ReferenceEnergies ref = reference_energies(b);
  Corpus out;
  for (int i = 0; i < spec.count; ++i) {
    const std::uint64_t s = trace_seed(spec.seed, i);
    std::mt19937_64 rng(s);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const bool bump = u(rng) < spec.bump_fraction;
    bool accepted = false;
    for (int attempt = 0; attempt < spec.max_attempts && !accepted; ++attempt) {
      ++out.attempts;
      Trace c = detail::draw_candidate(spec, b, rng, bump);
      double m = refined_min(c);
      if (m < 0.0 && spec.nonneg == NonnegMode::Lift) {
        c += constant_trace(b, -m);
        m = refined_min(c);
      }
      const double dist = project_to_S(c).distance;
      const double gap = W_of_homogeneous(c) - ref.W_S;
      if (m < -1e-13 || dist > spec.delta || gap > 1.0) {
        ++out.rejected;
        continue;
      }
      CorpusEntry e;
      char name[32];
      std::snprintf(name, sizeof name, "trace_%04d", i);
      e.name = name;
      e.seed = s;
      e.kind = bump ? "bump" : "generic";
      e.trace = c;
      e.distance = dist;
      e.gap = gap;
      e.nodal_min = nodal_min(c);
      out.entries.push_back(std::move(e));
      accepted = true;
    }
  }
  if (out.attempts > 0 && out.rejected > 0.99 * out.attempts)
    throw PreconditionError("generate_corpus: rejection rate above 99%, spec is infeasible");
  return out;
}

}  // namespace logepi
