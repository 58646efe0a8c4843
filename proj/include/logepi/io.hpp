#pragma once

// Serialization: traces and certificates as JSON, trajectories and manifests as CSV.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "logepi/competitors.hpp"
#include "logepi/corpus.hpp"
#include "logepi/critical_set.hpp"
#include "logepi/energy.hpp"
#include "logepi/errors.hpp"
#include "logepi/flows.hpp"
#include "logepi/trace.hpp"

namespace logepi {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Traces

inline json to_json(const Trace& t) {
  return {{"dim", t.basis->dim()}, {"max_degree", t.basis->max_degree()}, {"coeffs", t.coeffs}};
}

inline Trace trace_from_json(const json& j) {
  try {
    const int d = j.at("dim").get<int>(), L = j.at("max_degree").get<int>();
    return Trace(build_basis(d, L), j.at("coeffs").get<std::vector<double>>());
  } catch (const json::exception& e) {
    throw PreconditionError(std::string("malformed trace: ") + e.what());
  }
}

inline void write_trace_file(const std::filesystem::path& p, const Trace& t) {
  std::ofstream os(p);
  if (!os) throw PreconditionError("cannot write " + p.string());
  os << std::setprecision(17) << to_json(t).dump() << '\n';
}

inline Trace read_trace_file(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw PreconditionError("cannot read " + p.string());
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw PreconditionError(p.string() + ": " + e.what());
  }
  return trace_from_json(j);
}

// ---------------------------------------------------------------------------
// Reports

inline json to_json(const EpiCertificate& c) {
  return {{"id", c.id},         {"method", c.method},   {"gamma", c.gamma},
          {"epsilon", c.epsilon}, {"W_z", c.W_z},       {"W_h", c.W_h},
          {"W_S", c.W_S},       {"gap", c.gap()},       {"bound", c.bound},
          {"pass", c.pass},     {"positivity_min", c.positivity_min},
          {"gain_ratio", c.gain_ratio}, {"degenerate", c.degenerate}};
}

inline json to_json(const EnergyReport& r) {
  json modes = json::array();
  for (const auto& [j, w] : r.per_mode) modes.push_back({j, w});
  return {{"W0", r.w0}, {"W", r.w}, {"F", r.f}, {"gap", r.gap}, {"per_mode", modes}};
}

inline json to_json(const Projection& p) {
  json A = json::array();
  for (int i = 0; i < p.blowup.dim(); ++i) {
    json row = json::array();
    for (int k = 0; k < p.blowup.dim(); ++k) row.push_back(p.blowup.A(i, k));
    A.push_back(row);
  }
  return {{"A", A}, {"distance", p.distance}, {"eigen_tie", p.eigen_tie}};
}

// ---------------------------------------------------------------------------
// CSV

/// t, F, |psi'|^2, D, distance to S.
inline void write_trajectory_csv(std::ostream& os, const FlowTrajectory& traj) {
  os << "t,F,psi_dot_sq,D,dist_to_S\n" << std::setprecision(17);
  for (std::size_t k = 0; k < traj.size(); ++k)
    os << traj.times[k] << ',' << traj.F[k] << ',' << norm2(traj.derivatives[k]) << ',' << traj.D[k] << ','
       << distance_to_S(traj.states[k]) << '\n';
}

inline void write_manifest_csv(std::ostream& os, const Corpus& c) {
  os << "file,kind,seed,distance,gap,nodal_min\n" << std::setprecision(17);
  for (const CorpusEntry& e : c.entries)
    os << e.name << ".trace," << e.kind << ',' << e.seed << ',' << e.distance << ',' << e.gap << ',' << e.nodal_min
       << '\n';
}

/// Writes DIR/<name>.trace for every entry plus DIR/manifest.csv.
inline void write_corpus(const std::filesystem::path& dir, const Corpus& c) {
  std::filesystem::create_directories(dir);
  for (const CorpusEntry& e : c.entries) write_trace_file(dir / (e.name + ".trace"), e.trace);
  std::ofstream os(dir / "manifest.csv");
  write_manifest_csv(os, c);
}

}  // namespace logepi
