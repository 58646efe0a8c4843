// Command-line front end. Exit codes: 0 success, 1 a certificate or check failed,
// 2 usage or input error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "logepi/logepi.hpp"

using namespace logepi;
namespace fs = std::filesystem;

namespace {

// Flags that mirror RunConfig; applied over --config in declaration order.
struct ConfigFlags {
  std::string file;
  std::vector<std::string> sets;
  std::map<std::string, std::string> values;

  void attach(CLI::App* app) {
    app->add_option("--config", file, "key=value configuration file");
    app->add_option("--set", sets, "override, key=value (repeatable)");
    for (const char* key : {"d", "L", "oversample", "delta", "eps_cap", "kappa_cal", "eps_kappa", "dt", "T_max",
                            "corpus_size", "seed", "corpus_dir", "psor", "workers"}) {
      std::string flag = std::string("--") + key;
      for (char& c : flag)
        if (c == '_') c = '-';
      app->add_option(flag, values[key], std::string("config key ") + key);
    }
  }

  RunConfig resolve(const std::string& out = "") const {
    RunConfig cfg = file.empty() ? RunConfig{} : load_config(file);
    for (const auto& [k, v] : values)
      if (!v.empty()) cfg.set(k, v);
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw PreconditionError("--set expects key=value, got '" + s + "'");
      cfg.set(s.substr(0, eq), s.substr(eq + 1));
    }
    if (!out.empty()) cfg.out = out;
    cfg.validate();
    return cfg;
  }
};

void print(const json& j) { std::cout << std::setw(2) << j << '\n'; }

BoundaryData boundary(const std::string& name) {
  if (name == "quadratic") return [](double x, double y) { return (x * x + y * y) / 8.0; };
  if (name == "halfspace")
    return [](double x, double y) {
      const double t = x * std::cos(0.3) + y * std::sin(0.3) + 0.1;
      return t > 0.0 ? 0.25 * t * t : 0.0;
    };
  if (name == "perturbed")
    return [](double x, double y) { return (x * x + y * y) / 8.0 + 0.05 * (x * x * x - 3.0 * x * y * y); };
  throw PreconditionError("unknown boundary data '" + name + "' (quadratic, halfspace, perturbed)");
}

int certificate_exit(const std::vector<EpiCertificate>& certs) {
  for (const EpiCertificate& c : certs)
    if (!c.pass) return 1;
  return 0;
}

std::vector<CorpusEntry> inputs(const std::string& trace, const RunConfig& cfg) {
  if (!trace.empty()) {
    CorpusEntry e;
    e.name = fs::path(trace).stem().string();
    e.trace = read_trace_file(trace);
    return {e};
  }
  return make_corpus(cfg).entries;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical checks of a logarithmic epiperimetric inequality"};
  app.require_subcommand(1);

  // basis
  auto* basis = app.add_subcommand("basis", "describe a band-limited sphere basis and self-test it");
  int b_d = 2, b_L = 8, b_os = 1;
  basis->add_option("--d", b_d, "dimension (2 or 3)");
  basis->add_option("--L", b_L, "band limit");
  basis->add_option("--oversample", b_os, "quadrature oversampling factor");

  // project
  auto* project = app.add_subcommand("project", "project a trace onto the critical set");
  std::string p_trace;
  project->add_option("trace", p_trace, "trace file")->required();

  // energy
  auto* energy = app.add_subcommand("energy", "energies of the homogeneous extension r^{2+eps} c");
  std::string e_trace;
  double e_eps = 0.0;
  energy->add_option("trace", e_trace, "trace file")->required();
  energy->add_option("--eps", e_eps, "homogeneity offset");

  // certificates
  ConfigFlags f_direct, f_flow, f_grad, f_corpus, f_suite;
  auto* direct = app.add_subcommand("certify-direct", "direct competitor certificates");
  std::string d_trace;
  bool d_calibrate = false;
  direct->add_option("--trace", d_trace, "single trace file (default: the configured corpus)");
  direct->add_flag("--calibrate", d_calibrate, "search the largest dyadic kappa_cal passing the corpus");
  f_direct.attach(direct);

  auto* flow = app.add_subcommand("certify-flow", "certificates from the explicit flow");
  std::string fl_trace, fl_traj;
  flow->add_option("--trace", fl_trace, "single trace file (default: the configured corpus)");
  flow->add_option("--trajectory", fl_traj, "CSV output for the trajectory (single trace only)");
  f_flow.attach(flow);

  auto* grad = app.add_subcommand("certify-gradflow", "certificates from the projected gradient flow (d = 2)");
  std::string g_trace, g_traj;
  grad->add_option("--trace", g_trace, "single trace file (default: the configured corpus)");
  grad->add_option("--trajectory", g_traj, "CSV output for the trajectory (single trace only)");
  f_grad.attach(grad);

  // obstacle problem
  auto* obstacle = app.add_subcommand("obstacle", "solve the discrete obstacle problem on [-1, 1]^2");
  int o_n = 128;
  double o_tol = 1e-9, o_omega = 0.0;
  std::string o_bd = "quadratic", o_csv;
  obstacle->add_option("--n", o_n, "intervals per side");
  obstacle->add_option("--boundary", o_bd, "quadratic, halfspace or perturbed");
  obstacle->add_option("--tol", o_tol, "solver tolerance");
  obstacle->add_option("--omega", o_omega, "relaxation factor (0: optimal)");
  obstacle->add_option("--csv", o_csv, "grid CSV output");

  auto* blowup = app.add_subcommand("blowup", "blow-up traces and Weiss energies at the origin");
  int bl_n = 128, bl_L = 8;
  std::vector<double> bl_r{0.1, 0.2, 0.4, 0.8};
  std::string bl_bd = "perturbed";
  blowup->add_option("--n", bl_n, "intervals per side");
  blowup->add_option("--L", bl_L, "band limit of the traces");
  blowup->add_option("--boundary", bl_bd, "quadratic, halfspace or perturbed");
  blowup->add_option("--r", bl_r, "radii");

  // corpus and suite
  auto* corpus = app.add_subcommand("corpus", "generate a trace corpus with its manifest");
  std::string c_out;
  corpus->add_option("--out", c_out, "output directory")->required();
  f_corpus.attach(corpus);

  auto* suite = app.add_subcommand("suite", "run every verification section");
  std::string s_out;
  suite->add_option("--out", s_out, "output directory");
  f_suite.attach(suite);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*basis) {
      const BasisPtr b = build_basis(b_d, b_L, b_os);
      Trace c(b);
      for (std::size_t j = 0; j < c.size(); ++j) c[j] = std::sin(1.0 + j);
      json modes = json::array();
      for (const Mode& m : b->modes()) modes.push_back({{"degree", m.degree}, {"order", m.order}, {"lambda", m.lambda}});
      print({{"dim", b->dim()},
             {"max_degree", b->max_degree()},
             {"modes", b->size()},
             {"nodes", b->node_count()},
             {"max_eigenvalue", b->max_eigenvalue()},
             {"roundtrip_error", norm(analyze(synthesize(c), b) - c)},
             {"spectrum", modes}});
      return 0;
    }
    if (*project) {
      const Trace c = read_trace_file(p_trace);
      json j = to_json(project_to_S(c));
      j["trace"] = p_trace;
      print(j);
      return 0;
    }
    if (*energy) {
      const Trace c = read_trace_file(e_trace);
      const RadialProfileField f = power_extension(c, std::vector<double>(c.size(), e_eps));
      const double W_S = reference_energies(c.basis).W_S;
      print({{"trace", e_trace},
             {"eps", e_eps},
             {"spectral", to_json(spectral_report(f, W_S))},
             {"volumetric", to_json(W_volumetric(sample_polar(f), W_S))},
             {"slicing_W", slicing_W(f)}});
      return 0;
    }
    if (*direct) {
      const RunConfig cfg = f_direct.resolve();
      if (d_calibrate) {
        json log = json::array();
        const double k = calibrate_kappa(cfg, make_corpus(cfg), &log);
        print({{"kappa_cal", k}, {"dim", cfg.d}, {"seed", cfg.seed}, {"candidates", log}});
        return k > 0.0 ? 0 : 1;
      }
      std::vector<EpiCertificate> certs;
      for (const CorpusEntry& e : inputs(d_trace, cfg)) {
        certs.push_back(certify_direct(e.trace, direct_params(cfg), e.name));
        std::cout << to_json(certs.back()).dump() << '\n';
      }
      return certificate_exit(certs);
    }
    if (*flow || *grad) {
      const bool explicit_ = flow->parsed();
      const RunConfig cfg = (explicit_ ? f_flow : f_grad).resolve();
      const std::string& one = explicit_ ? fl_trace : g_trace;
      const std::string& csv = explicit_ ? fl_traj : g_traj;
      std::vector<EpiCertificate> certs;
      for (const CorpusEntry& e : inputs(one, cfg)) {
        const FlowGainResult r = explicit_ ? certify_explicit(cfg, e.trace, e.name) : certify_pvi(cfg, e.trace, e.name);
        json j = to_json(r.cert);
        j["method"] = explicit_ ? "explicit_flow" : "pvi_flow";
        j["case"] = r.case_id;
        j["kappa"] = r.kappa;
        j["eps_kappa"] = r.eps_kappa;
        j["iterations"] = r.iterations;
        j["C_ED"] = r.C_ED;
        j["C_LS"] = r.C_LS;
        j["T_half"] = r.T_half;
        std::cout << j.dump() << '\n';
        certs.push_back(r.cert);
        if (!csv.empty() && !one.empty()) {
          std::ofstream os(csv);
          write_trajectory_csv(os, explicit_ ? explicit_flow(split_trace(e.trace), flow_times(cfg)) : pvi_flow(cfg, e.trace));
        }
      }
      return certificate_exit(certs);
    }
    if (*obstacle) {
      PsorOptions opt;
      opt.tol = o_tol;
      opt.omega = o_omega;
      const GridField g = psor_solve(boundary(o_bd), o_n, opt);
      if (!o_csv.empty()) {
        std::ofstream os(o_csv);
        g.write_csv(os);
      }
      print({{"n", g.n}, {"h", g.h()}, {"sweeps", g.sweeps}, {"residual", g.residual}, {"energy", discrete_energy(g)}});
      return 0;
    }
    if (*blowup) {
      const GridField g = psor_solve(boundary(bl_bd), bl_n);
      const WeissSeries w = weiss_series(g, {0.0, 0.0}, bl_r, build_basis(2, bl_L));
      json pts = json::array();
      for (const WeissPoint& p : w.points)
        pts.push_back({{"r", p.r}, {"W", p.W}, {"D", p.D}, {"trace", to_json(p.trace)}});
      print({{"n", g.n}, {"min_increment", w.min_increment}, {"monotone", w.monotone(g.h())}, {"points", pts}});
      return w.monotone(g.h()) ? 0 : 1;
    }
    if (*corpus) {
      const RunConfig cfg = f_corpus.resolve(c_out);
      const Corpus c = generate_corpus(corpus_spec(cfg));
      write_corpus(c_out, c);
      std::ofstream(fs::path(c_out) / "config.txt") << cfg.to_text();
      print({{"traces", c.entries.size()}, {"attempts", c.attempts}, {"rejected", c.rejected}, {"seed", cfg.seed}});
      return 0;
    }
    if (*suite) {
      RunConfig cfg;
      try {
        cfg = f_suite.resolve(s_out);
      } catch (const PreconditionError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return 2;
      }
      const SuiteReport r = run_suite(cfg, &std::cerr);
      print(to_json(r, cfg));
      return r.exit_code;
    }
  } catch (const PreconditionError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
