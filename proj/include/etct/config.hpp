#pragma once

#include "etct/ergodic.hpp"

#include <string>

namespace etct {

struct TriggerConfig {
  std::string type = "relative_error";  // relative_error | lyapunov_decay | quadratic
  double sigma = 0.0;
  Matrix P;
  double rho = 0.0;
  Matrix Q;  // constant, 2n x 2n
};

struct SystemConfig {
  std::string kind = "petc";
  Matrix A, B, K;
  TriggerConfig trigger;
  double h = 0.0;
  double tau_bar = 0.0;
};

struct ErgodicConfig {
  int n_points = 1000;
  int max_iters = 15;
  double alpha = 0.05;
  int permutations = 9999;
  int average_steps = 200;
  std::string split = "weighting";  // weighting | halves
};

struct AnalysisConfig {
  int l_max = 10;
  std::string backend = "exact";
  std::string policy = "outer";
  int samples = 20000;
  std::uint64_t seed = 1;
  double psd_tol = 1e-9;
  double strict_margin = 1e-10;
  double eq_tol = 1e-9;
  int n_sim = 1000;
  int sim_length = 40;
  int threads = 1;
  double max_seconds = -1.0;
  double smt_timeout_s = 30.0;
  bool stop_when_exact = true;
  ErgodicConfig ergodic;
};

struct OutputConfig {
  std::string path;
  std::string format = "json";  // json | csv | dot
};

struct RunConfig {
  SystemConfig system;
  AnalysisConfig analysis;
  OutputConfig output;
};

// Strict: unknown keys, wrong types and bad shapes raise ConfigError.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& cfg);

EtcSystem make_system(const RunConfig& cfg);
BuildOptions make_build_options(const RunConfig& cfg);
AnalyzeOptions make_analyze_options(const RunConfig& cfg);
ErgodicOptions make_ergodic_options(const RunConfig& cfg);

}  // namespace etct
