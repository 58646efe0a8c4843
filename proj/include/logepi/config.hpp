#pragma once

// Run configuration as flat key=value text, plus a deterministic parallel map.

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "logepi/errors.hpp"

namespace logepi {

struct RunConfig {
  int d = 2;
  int L = 8;
  int oversample = 1;  // quadrature oversampling factor
  double delta = 1e-2;
  double eps_cap = 0.5;
  double kappa_cal = 1.0;
  double eps_kappa = 0.0;  // 0: largest admissible dyadic value
  double dt = 0.0;         // 0: largest stable PVI step
  double T_max = 2.0;
  int corpus_size = 200;
  std::uint64_t seed = 1;
  std::string out;
  std::string corpus_dir;  // read traces from here instead of generating
  bool psor = true;
  int workers = 0;  // 0: LOGEPI_WORKERS or 1

  // tolerance table
  std::map<std::string, double> tol{
      {"oracle", 1e-5},     {"reference", 1e-10}, {"identity", 1e-9}, {"positivity", 1e-10},
      {"gain", 1e-8},       {"lojasiewicz", 1e-6}, {"gronwall", 1e-8}, {"decay", 1e-8},
      {"slope", 1e-2},      {"dyadic", 2e-2},      {"psor", 1e-9},     {"order_ratio", 0.3},
  };

  void set(const std::string& key, const std::string& value) {
    auto num = [&] {
      std::size_t pos = 0;
      double v = 0.0;
      try {
        v = std::stod(value, &pos);
      } catch (const std::exception&) {
        pos = 0;
      }
      if (pos == 0 || pos != value.size()) throw PreconditionError("config: " + key + " expects a number, got '" + value + "'");
      return v;
    };
    auto integer = [&] {
      const double v = num();
      if (v != static_cast<double>(static_cast<long long>(v))) throw PreconditionError("config: " + key + " expects an integer");
      return static_cast<long long>(v);
    };
    if (key == "d") d = static_cast<int>(integer());
    else if (key == "L") L = static_cast<int>(integer());
    else if (key == "oversample") oversample = static_cast<int>(integer());
    else if (key == "delta") delta = num();
    else if (key == "eps_cap") eps_cap = num();
    else if (key == "kappa_cal") kappa_cal = num();
    else if (key == "eps_kappa") eps_kappa = num();
    else if (key == "dt") dt = num();
    else if (key == "T_max") T_max = num();
    else if (key == "corpus_size") corpus_size = static_cast<int>(integer());
    else if (key == "seed") seed = static_cast<std::uint64_t>(integer());
    else if (key == "out") out = value;
    else if (key == "corpus_dir") corpus_dir = value;
    else if (key == "psor") psor = integer() != 0;
    else if (key == "workers") workers = static_cast<int>(integer());
    else if (key.rfind("tol.", 0) == 0 && tol.count(key.substr(4))) tol[key.substr(4)] = num();
    else throw PreconditionError("config: unknown key '" + key + "'");
  }

  void validate() const {
    if (d != 2 && d != 3) throw PreconditionError("config: d must be 2 or 3");
    if (L < 3) throw PreconditionError("config: L must be at least 3");
    if (oversample < 1) throw PreconditionError("config: oversample must be >= 1");
    if (!(delta > 0.0) || !(eps_cap > 0.0) || !(kappa_cal > 0.0) || !(T_max > 0.0) || eps_kappa < 0.0 || dt < 0.0)
      throw PreconditionError("config: delta, eps_cap, kappa_cal, T_max must be positive");
    if (corpus_size < 1) throw PreconditionError("config: corpus_size must be positive");
    for (const auto& [k, v] : tol)
      if (!(v > 0.0)) throw PreconditionError("config: tolerance " + k + " must be positive");
  }

  /// Resolved configuration, one key=value per line in a fixed order.
  std::string to_text() const {
    std::ostringstream os;
    os << std::setprecision(17);
    os << "d=" << d << "\nL=" << L << "\noversample=" << oversample << "\ndelta=" << delta << "\neps_cap=" << eps_cap
       << "\nkappa_cal=" << kappa_cal << "\neps_kappa=" << eps_kappa << "\ndt=" << dt << "\nT_max=" << T_max
       << "\ncorpus_size=" << corpus_size << "\nseed=" << seed << "\ncorpus_dir=" << corpus_dir
       << "\npsor=" << psor << '\n';
    for (const auto& [k, v] : tol) os << "tol." << k << '=' << v << '\n';
    return os.str();
  }

  int resolved_workers() const {
    if (workers > 0) return workers;
    if (const char* env = std::getenv("LOGEPI_WORKERS")) {
      const int w = std::atoi(env);
      if (w > 0) return w;
    }
    return 1;
  }
};

/// Parses key=value lines; '#' starts a comment, blank lines are ignored.
inline void apply_config_text(RunConfig& cfg, const std::string& text) {
  std::istringstream is(text);
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw PreconditionError("config line " + std::to_string(n) + ": expected key=value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw PreconditionError("cannot read config " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  RunConfig cfg;
  apply_config_text(cfg, ss.str());
  return cfg;
}

/// FNV-1a of the resolved text, as 16 hex digits.
inline std::string config_hash(const RunConfig& cfg) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : cfg.to_text()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

/// out[i] = fn(i) for i < n on up to `workers` threads; order of results is fixed.
template <class R>
std::vector<R> parallel_map(std::size_t n, int workers, const std::function<R(std::size_t)>& fn) {
  std::vector<R> out(n);
  if (workers <= 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) out[i] = fn(i);
    return out;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  const std::size_t w = std::min<std::size_t>(workers, n);
  for (std::size_t t = 0; t < w; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < n; i += w) {
        try {
          out[i] = fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

}  // namespace logepi
