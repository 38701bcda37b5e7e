// etct: command-line front end for building traffic models and computing
// sampling metrics of event-triggered linear systems.

#include "etct/config.hpp"
#include "etct/errors.hpp"
#include "etct/ist_bounds.hpp"
#include "etct/rng.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

using namespace etct;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIncomplete = 3;
constexpr int kExitNumeric = 4;

struct Globals {
  std::string config;
  std::string out;
  std::string format;
  std::string backend;
  int samples = -1;
  long long seed = -1;
  int threads = -1;
  int l = -1;
};

RunConfig load(const Globals& g) {
  RunConfig cfg = load_config(g.config);
  if (!g.backend.empty()) cfg.analysis.backend = g.backend;
  if (g.samples >= 0) cfg.analysis.samples = g.samples;
  if (g.seed >= 0) cfg.analysis.seed = static_cast<std::uint64_t>(g.seed);
  if (g.threads >= 0) cfg.analysis.threads = g.threads;
  if (g.l >= 1) cfg.analysis.l_max = g.l;
  if (!g.out.empty()) cfg.output.path = g.out;
  if (!g.format.empty()) cfg.output.format = g.format;
  parse_backend(cfg.analysis.backend);
  return cfg;
}

void emit(const RunConfig& cfg, const std::string& text) {
  if (cfg.output.path.empty() || cfg.output.path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.output.path);
  if (!out) throw ConfigError("cannot write " + cfg.output.path);
  out << text;
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

int cmd_abstract(const Globals& g) {
  const RunConfig cfg = load(g);
  const EtcSystem sys = make_system(cfg);
  if (!sys.is_petc()) throw ConfigError("abstract needs a periodic (petc) system");
  BuildStats stats;
  const TrafficModel model = build_model(sys, cfg.analysis.l_max, make_build_options(cfg), &stats);
  const EntropyEstimate e = behavioral_entropy(model);
  if (cfg.output.format == "dot") {
    emit(cfg, model_to_dot(model));
  } else if (cfg.output.format == "json") {
    emit(cfg, model_to_json(model));
  } else {
    throw ConfigError("abstract writes json or dot");
  }
  std::ostream& log = cfg.output.path.empty() ? std::cerr : std::cout;
  log << "l: " << model.l << "\nstates: " << model.size() << "\nedges: " << model.edge_count()
      << "\nentropy: " << fmt(e.bits, 10) << " bits\nqueries: " << stats.queries << "\nseconds: " << fmt(stats.seconds, 4)
      << "\n";
  if (model.incomplete) {
    std::cerr << "budget exhausted; model is incomplete\n";
    return kExitIncomplete;
  }
  return kExitOk;
}

std::string metric_cell(const MetricValue& m) {
  std::string s = fmt(m.value, 3);
  if (m.status != MetricStatus::Exact) s += "*";
  return s;
}

int cmd_metrics(const Globals& g) {
  const RunConfig cfg = load(g);
  const EtcSystem sys = make_system(cfg);
  const MetricsReport r = analyze(sys, make_analyze_options(cfg));
  emit(cfg, report_to_json(r));
  std::ostream& log = cfg.output.path.empty() ? std::cerr : std::cout;
  log << std::left << std::setw(22) << "" << "value (robust)\n"
      << std::setw(22) << "l" << r.ila.l << " (" << r.rob_ila.l << ")\n"
      << std::setw(22) << "ILA (RobILA)" << metric_cell(r.ila) << " (" << metric_cell(r.rob_ila) << ")\n"
      << std::setw(22) << "ILI (RobILI)" << metric_cell(r.ili) << " (" << metric_cell(r.rob_ili) << ")\n"
      << std::setw(22) << "SLS" << metric_cell(r.sls) << "\n"
      << std::setw(22) << "entropy [bits]" << fmt(r.entropy_bits, 6) << "\n"
      << std::setw(22) << "states (l=" + std::to_string(r.l) + ")" << r.states << "\n"
      << std::setw(22) << "wall time [s]" << fmt(r.seconds, 4) << "\n";
  for (const auto& [name, m] : {std::pair<const char*, const MetricValue*>{"ILA", &r.ila}, {"RobILA", &r.rob_ila},
                                {"ILI", &r.ili}, {"RobILI", &r.rob_ili}, {"SLS", &r.sls}}) {
    if (m->status != MetricStatus::Exact) log << "* " << name << ": " << to_string(m->status) << "\n";
  }
  if (r.chaos_suspected) log << "chaos suspected: largest component has " << r.largest_component << " states\n";
  return r.incomplete ? kExitIncomplete : kExitOk;
}

int cmd_entropy_curve(const Globals& g) {
  RunConfig cfg = load(g);
  const EtcSystem sys = make_system(cfg);
  AnalyzeOptions opt = make_analyze_options(cfg);
  opt.stop_when_exact = false;
  const MetricsReport r = analyze(sys, opt);
  emit(cfg, entropy_curve_csv(r.entropy_curve));
  return r.incomplete ? kExitIncomplete : kExitOk;
}

int cmd_verify_cycle(const Globals& g, const std::string& cycle) {
  const RunConfig cfg = load(g);
  const EtcSystem sys = make_system(cfg);
  const KSequence sigma = parse_ksequence(cycle);
  for (int k : sigma) {
    if (k < 1 || k > sys.k_bar()) throw DomainError("cycle entries must lie in 1.." + std::to_string(sys.k_bar()));
  }
  const CycleWitness w = verify_cycle(sys, sigma);
  const InstabilityResult ir = instability_check(sys, sigma);
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["kind"] = "cycle_verdict";
  j["cycle"] = to_string(sigma);
  j["verified"] = w.verified;
  j["classification"] = to_string(w.classification);
  j["instability"] = to_string(ir.classification);
  j["average"] = w.average(sys.h());
  j["schur"] = schur_check(w.M_sigma);
  j["conclusive"] = w.conclusive;
  j["note"] = w.note;
  emit(cfg, j.dump(1) + "\n");
  std::cerr << "cycle " << to_string(sigma) << ": " << (w.verified ? "verified" : "not verified") << "\n";
  return kExitOk;
}

int cmd_fixed_lines(const Globals& g) {
  const RunConfig cfg = load(g);
  const EtcSystem sys = make_system(cfg);
  if (sys.is_petc()) throw ConfigError("fixed-lines needs a continuous (cetc) system");
  const IstBound inf = inf_ist(sys);
  const IstBound sup = sup_ist(sys, make_build_options(cfg).budget);
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["kind"] = "fixed_lines";
  j["inf"] = inf.value;
  j["sup"] = sup.value;
  j["sup_exact"] = sup.exact;
  nlohmann::ordered_json lines = nlohmann::ordered_json::array();
  for (const FixedLine& f : fixed_oline_search_cetc(sys)) {
    const AttractivityResult a = attractivity_check(sys, f.direction);
    lines.push_back({{"t", f.t},
                     {"eigenvalue", f.eigenvalue},
                     {"direction", {f.direction[0], f.direction.size() > 1 ? f.direction[1] : 0.0}},
                     {"angle_sin_cos", sys.n() == 2 ? line_angle(f.direction, ThetaConvention::SinCos) : 0.0},
                     {"angle_cos_sin", sys.n() == 2 ? line_angle(f.direction, ThetaConvention::CosSin) : 0.0},
                     {"attractive", a.attractive},
                     {"schur", schur_check(build_M(sys, f.t))}});
  }
  j["fixed_lines"] = lines;
  emit(cfg, j.dump(1) + "\n");
  return kExitOk;
}

int cmd_simulate(const Globals& g, const std::string& x0_text, int n, const std::string& cobweb) {
  const RunConfig cfg = load(g);
  const EtcSystem sys = make_system(cfg);
  Vector x0(sys.n());
  if (!x0_text.empty()) {
    std::vector<double> v;
    std::stringstream ss(x0_text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        v.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw ConfigError("bad --x0 entry '" + item + "'");
      }
    }
    if (static_cast<int>(v.size()) != sys.n()) throw ConfigError("--x0 needs " + std::to_string(sys.n()) + " entries");
    for (int i = 0; i < sys.n(); ++i) x0[i] = v[i];
  } else {
    Rng rng(derive_seed(cfg.analysis.seed, "simulate"));
    std::normal_distribution<double> gauss;
    for (int i = 0; i < sys.n(); ++i) x0[i] = gauss(rng);
  }
  if (n < 1) throw ConfigError("--n must be at least 1");
  const SampleTrajectory t = simulate(sys, x0, n, true);
  std::ostringstream os;
  os << "# format_version 1\nstep";
  for (int i = 0; i < sys.n(); ++i) os << ",x" << i;
  os << ",output\n" << std::setprecision(12);
  for (int k = 0; k < n; ++k) {
    os << k;
    for (int i = 0; i < sys.n(); ++i) os << ',' << t.states[k][i];
    os << ',' << t.outputs[k] << '\n';
  }
  emit(cfg, os.str());
  if (!cobweb.empty()) {
    if (sys.n() != 2) throw ConfigError("cobweb output needs a planar system");
    std::ofstream cw(cobweb);
    if (!cw) throw ConfigError("cannot write " + cobweb);
    cw << "# format_version 1\nstep,theta,theta_next,output\n" << std::setprecision(12);
    for (int k = 0; k < n; ++k) {
      cw << k << ',' << theta_angle(t.states[k]) << ',' << theta_angle(t.states[k + 1]) << ',' << t.outputs[k] << '\n';
    }
  }
  return kExitOk;
}

int cmd_ergodic(const Globals& g, const std::string& scc_text, const std::string& history) {
  const RunConfig cfg = load(g);
  const EtcSystem sys = make_system(cfg);
  if (!sys.is_petc()) throw ConfigError("ergodic-test needs a periodic (petc) system");
  const TrafficModel model = build_model(sys, cfg.analysis.l_max, make_build_options(cfg));
  const SccDecomposition scc = scc_decompose(model);
  int component;
  if (scc_text == "auto") {
    component = largest_complex_component(scc);
    if (component < 0) throw DomainError("model has no non-simple component to test");
  } else {
    try {
      component = std::stoi(scc_text);
    } catch (const std::exception&) {
      throw ConfigError("--scc takes a component id or 'auto'");
    }
  }
  const ErgodicReport r = ergodicity_protocol(sys, model, component, make_ergodic_options(cfg));
  emit(cfg, ergodic_report_json(r, sys.h()));
  if (!history.empty()) {
    std::ofstream h(history);
    if (!h) throw ConfigError("cannot write " + history);
    h << history_csv(r, sys.h());
  }
  std::cerr << r.verdict << "; average " << fmt(r.average, 4) << " in [" << fmt(r.ci_low, 4) << ", "
            << fmt(r.ci_high, 4) << "]\n";
  return model.incomplete ? kExitIncomplete : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Traffic models and sampling metrics of event-triggered linear systems"};
  app.require_subcommand(1);
  Globals g;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", g.config, "run configuration (JSON)")->required();
    sub->add_option("--out", g.out, "output file, '-' for stdout");
    sub->add_option("--format", g.format, "json, csv or dot")->check(CLI::IsMember({"json", "csv", "dot"}));
    sub->add_option("--backend", g.backend, "sampling, exact or smt")->check(CLI::IsMember({"sampling", "exact", "smt"}));
    sub->add_option("--samples", g.samples, "sampling oracle budget");
    sub->add_option("--seed", g.seed, "root seed");
    sub->add_option("--threads", g.threads, "worker threads (0 = all cores)");
    sub->add_option("--l,--l-max", g.l, "model depth / refinement limit");
  };

  auto* abstract = app.add_subcommand("abstract", "build the l-complete traffic model");
  add_common(abstract);
  auto* metrics = app.add_subcommand("metrics", "limit metrics with refinement until exact");
  add_common(metrics);
  auto* curve = app.add_subcommand("entropy-curve", "behavioral entropy for l = 1..l_max");
  add_common(curve);
  auto* verify = app.add_subcommand("verify-cycle", "check whether a periodic pattern occurs");
  add_common(verify);
  std::string cycle;
  verify->add_option("--cycle", cycle, "comma-separated steps, e.g. 7,9")->required();
  auto* fixed = app.add_subcommand("fixed-lines", "fixed o-lines of a continuous-triggering system");
  add_common(fixed);
  auto* sim = app.add_subcommand("simulate", "sample trajectory as CSV");
  add_common(sim);
  std::string x0, cobweb;
  int steps = 100;
  sim->add_option("--x0", x0, "comma-separated initial state (default: random from --seed)");
  sim->add_option("--n", steps, "number of samples");
  sim->add_option("--cobweb", cobweb, "also write angle pairs for a cobweb plot");
  auto* ergo = app.add_subcommand("ergodic-test", "two-ensemble ergodicity test on a component");
  add_common(ergo);
  std::string scc = "auto", history;
  ergo->add_option("--scc", scc, "component id or 'auto'");
  ergo->add_option("--history", history, "output-history CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    if (*abstract) return cmd_abstract(g);
    if (*metrics) return cmd_metrics(g);
    if (*curve) return cmd_entropy_curve(g);
    if (*verify) return cmd_verify_cycle(g, cycle);
    if (*fixed) return cmd_fixed_lines(g);
    if (*sim) return cmd_simulate(g, x0, steps, cobweb);
    if (*ergo) return cmd_ergodic(g, scc, history);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DimensionError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumeric;
  }
  return kExitOk;
}
