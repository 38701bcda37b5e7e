#include "etct/config.hpp"

#include "etct/errors.hpp"
#include "etct/parallel.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace etct {

using json = nlohmann::ordered_json;

namespace {

constexpr int kConfigFormat = 1;

// Reads keys of one object and rejects whatever was not read.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }
  ~Reader() = default;

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!j_.contains(key)) throw ConfigError(where_ + "." + key + ": missing");
    used_.insert(key);
    return j_.at(key);
  }

  template <class T>
  void opt(const std::string& key, T& out) {
    if (!j_.contains(key)) return;
    used_.insert(key);
    out = convert<T>(j_.at(key), where_ + "." + key);
  }

  template <class T>
  T req(const std::string& key) {
    return convert<T>(raw(key), where_ + "." + key);
  }

  void finish() const {
    for (const auto& [k, v] : j_.items()) {
      if (!used_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
    }
  }

  const std::string& where() const { return where_; }

 private:
  template <class T>
  static T convert(const json& v, const std::string& where) {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw ConfigError(where + ": expected a boolean");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw ConfigError(where + ": expected a string");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError(where + ": expected an integer");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0) {
          throw ConfigError(where + ": expected a non-negative integer");
        }
      }
    } else {
      if (!v.is_number()) throw ConfigError(where + ": expected a number");
    }
    return v.get<T>();
  }

  const json& j_;
  std::string where_;
  std::set<std::string> used_;
};

Matrix parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError(where + ": expected a non-empty array of rows");
  const std::size_t cols = j.front().is_array() ? j.front().size() : 0;
  if (cols == 0) throw ConfigError(where + ": rows must be non-empty arrays");
  Matrix M(j.size(), cols);
  for (std::size_t r = 0; r < j.size(); ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw ConfigError(where + ": ragged matrix");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw ConfigError(where + ": entries must be numbers");
      M(r, c) = j[r][c].get<double>();
    }
  }
  return M;
}

json matrix_json(const Matrix& M) {
  json rows = json::array();
  for (int r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

TriggerConfig parse_trigger(const json& j) {
  Reader rd(j, "system.trigger");
  TriggerConfig t;
  t.type = rd.req<std::string>("type");
  if (t.type == "relative_error") {
    t.sigma = rd.req<double>("sigma");
  } else if (t.type == "lyapunov_decay") {
    t.P = parse_matrix(rd.raw("P"), "system.trigger.P");
    t.rho = rd.req<double>("rho");
  } else if (t.type == "quadratic") {
    t.Q = parse_matrix(rd.raw("Q"), "system.trigger.Q");
  } else {
    throw ConfigError("system.trigger.type: unknown trigger '" + t.type + "'");
  }
  rd.finish();
  return t;
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Reader top(root, "config");
  const int version = top.req<int>("format_version");
  if (version != kConfigFormat) throw ConfigError("unsupported config format_version " + std::to_string(version));

  RunConfig cfg;
  {
    Reader rd(top.raw("system"), "system");
    auto& s = cfg.system;
    s.kind = rd.req<std::string>("kind");
    if (s.kind != "petc" && s.kind != "cetc") throw ConfigError("system.kind must be petc or cetc");
    s.A = parse_matrix(rd.raw("A"), "system.A");
    s.B = parse_matrix(rd.raw("B"), "system.B");
    s.K = parse_matrix(rd.raw("K"), "system.K");
    s.trigger = parse_trigger(rd.raw("trigger"));
    rd.opt("h", s.h);
    s.tau_bar = rd.req<double>("tau_bar");
    rd.finish();
  }
  if (top.has("analysis")) {
    Reader rd(top.raw("analysis"), "analysis");
    auto& a = cfg.analysis;
    rd.opt("l_max", a.l_max);
    rd.opt("backend", a.backend);
    rd.opt("policy", a.policy);
    rd.opt("samples", a.samples);
    rd.opt("seed", a.seed);
    rd.opt("psd_tol", a.psd_tol);
    rd.opt("strict_margin", a.strict_margin);
    rd.opt("eq_tol", a.eq_tol);
    rd.opt("n_sim", a.n_sim);
    rd.opt("sim_length", a.sim_length);
    rd.opt("threads", a.threads);
    rd.opt("max_seconds", a.max_seconds);
    rd.opt("smt_timeout_s", a.smt_timeout_s);
    rd.opt("stop_when_exact", a.stop_when_exact);
    if (rd.has("ergodic")) {
      Reader er(rd.raw("ergodic"), "analysis.ergodic");
      auto& e = a.ergodic;
      er.opt("n_points", e.n_points);
      er.opt("max_iters", e.max_iters);
      er.opt("alpha", e.alpha);
      er.opt("permutations", e.permutations);
      er.opt("average_steps", e.average_steps);
      er.opt("split", e.split);
      er.finish();
      if (e.split != "weighting" && e.split != "halves") throw ConfigError("analysis.ergodic.split: weighting or halves");
      if (!(e.alpha > 0.0 && e.alpha < 1.0)) throw ConfigError("analysis.ergodic.alpha must lie in (0, 1)");
    }
    rd.finish();
    parse_backend(a.backend);
    parse_policy(a.policy);
    if (a.l_max < 1) throw ConfigError("analysis.l_max must be at least 1");
    if (a.threads < 0) throw ConfigError("analysis.threads must be non-negative");
  }
  if (top.has("output")) {
    Reader rd(top.raw("output"), "output");
    rd.opt("path", cfg.output.path);
    rd.opt("format", cfg.output.format);
    rd.finish();
    const auto& f = cfg.output.format;
    if (f != "json" && f != "csv" && f != "dot") throw ConfigError("output.format must be json, csv or dot");
  }
  top.finish();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const RunConfig& cfg) {
  json root;
  root["format_version"] = kConfigFormat;
  const auto& s = cfg.system;
  json sys;
  sys["kind"] = s.kind;
  sys["A"] = matrix_json(s.A);
  sys["B"] = matrix_json(s.B);
  sys["K"] = matrix_json(s.K);
  json trig;
  trig["type"] = s.trigger.type;
  if (s.trigger.type == "relative_error") {
    trig["sigma"] = s.trigger.sigma;
  } else if (s.trigger.type == "lyapunov_decay") {
    trig["P"] = matrix_json(s.trigger.P);
    trig["rho"] = s.trigger.rho;
  } else {
    trig["Q"] = matrix_json(s.trigger.Q);
  }
  sys["trigger"] = trig;
  sys["h"] = s.h;
  sys["tau_bar"] = s.tau_bar;
  root["system"] = sys;

  const auto& a = cfg.analysis;
  json an;
  an["l_max"] = a.l_max;
  an["backend"] = a.backend;
  an["policy"] = a.policy;
  an["samples"] = a.samples;
  an["seed"] = a.seed;
  an["psd_tol"] = a.psd_tol;
  an["strict_margin"] = a.strict_margin;
  an["eq_tol"] = a.eq_tol;
  an["n_sim"] = a.n_sim;
  an["sim_length"] = a.sim_length;
  an["threads"] = a.threads;
  an["max_seconds"] = a.max_seconds;
  an["smt_timeout_s"] = a.smt_timeout_s;
  an["stop_when_exact"] = a.stop_when_exact;
  an["ergodic"] = {{"n_points", a.ergodic.n_points},
                   {"max_iters", a.ergodic.max_iters},
                   {"alpha", a.ergodic.alpha},
                   {"permutations", a.ergodic.permutations},
                   {"average_steps", a.ergodic.average_steps},
                   {"split", a.ergodic.split}};
  root["analysis"] = an;
  root["output"] = {{"path", cfg.output.path}, {"format", cfg.output.format}};
  return root.dump(2) + "\n";
}

EtcSystem make_system(const RunConfig& cfg) {
  const auto& s = cfg.system;
  TriggeringSpec trig;
  if (s.trigger.type == "relative_error") {
    trig = RelativeErrorTrigger{s.trigger.sigma};
  } else if (s.trigger.type == "lyapunov_decay") {
    trig = LyapunovDecayTrigger{s.trigger.P, s.trigger.rho};
  } else {
    trig = GeneralQuadratic::from_constant(s.trigger.Q);
  }
  Tolerances tol;
  tol.psd_tol = cfg.analysis.psd_tol;
  tol.strict_margin = cfg.analysis.strict_margin;
  try {
    return EtcSystem(s.A, s.B, s.K, trig, s.kind == "petc" ? SystemKind::PETC : SystemKind::CETC, s.h, s.tau_bar,
                     tol);
  } catch (const DimensionError& e) {
    throw ConfigError(std::string("system: ") + e.what());
  }
}

BuildOptions make_build_options(const RunConfig& cfg) {
  const auto& a = cfg.analysis;
  BuildOptions b;
  b.policy = parse_policy(a.policy);
  b.budget.backend = parse_backend(a.backend);
  b.budget.samples = a.samples;
  b.budget.seed = a.seed;
  b.budget.strict_margin = a.strict_margin;
  b.budget.eq_tol = a.eq_tol;
  b.budget.smt_timeout_s = a.smt_timeout_s;
  b.n_sim = a.n_sim;
  b.sim_length = a.sim_length;
  b.max_seconds = a.max_seconds;
  b.threads = a.threads == 0 ? default_threads() : a.threads;
  return b;
}

AnalyzeOptions make_analyze_options(const RunConfig& cfg) {
  AnalyzeOptions o;
  o.l_max = cfg.analysis.l_max;
  o.build = make_build_options(cfg);
  o.stop_when_exact = cfg.analysis.stop_when_exact;
  o.max_seconds = cfg.analysis.max_seconds;
  return o;
}

ErgodicOptions make_ergodic_options(const RunConfig& cfg) {
  const auto& e = cfg.analysis.ergodic;
  ErgodicOptions o;
  o.n_points = e.n_points;
  o.max_iters = e.max_iters;
  o.alpha = e.alpha;
  o.test.permutations = e.permutations;
  o.average_steps = e.average_steps;
  o.split = e.split == "halves" ? ErgodicOptions::Split::Halves : ErgodicOptions::Split::Weighting;
  o.seed = cfg.analysis.seed;
  o.threads = cfg.analysis.threads == 0 ? default_threads() : cfg.analysis.threads;
  return o;
}

}  // namespace etct
