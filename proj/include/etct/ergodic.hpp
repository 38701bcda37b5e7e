#pragma once

#include "etct/graph_metrics.hpp"

#include <optional>

namespace etct {

struct Ensemble {
  std::vector<Vector> points;  // unit vectors
  int component = -1;
  std::string provenance;
  int iteration = 0;
  std::vector<std::string> warnings;
};

struct SeedOptions {
  std::uint64_t seed = 0;
  std::string stream = "a";
  int max_attempts_per_point = 50;
  // Pick states uniformly, or in proportion to their region's angular
  // measure (planar systems; uniform on the union of the regions).
  bool measure_weighted = false;
  // Subset of the component's states to draw from (sorted model indices);
  // empty means all of them.
  std::vector<int> pool;
};

// Points drawn inside the isosequential regions of the component's states,
// kept only if re-simulation reproduces the state's sequence.
Ensemble seed_from_scc(const EtcSystem& sys, const TrafficModel& model, const SccDecomposition& scc, int component,
                       int n_points, const SeedOptions& opt);

struct EnsembleHistory {
  Ensemble final;
  std::vector<std::vector<int>> steps;  // per point, outputs in steps of h
};

EnsembleHistory iterate_ensemble(const EtcSystem& sys, const Ensemble& ens, int steps, int threads = 1);

struct TwoSampleTest {
  double statistic = 0.0;
  double p_value = 1.0;
  int permutations = 0;
};

struct PermutationOptions {
  int permutations = 9999;
  std::uint64_t seed = 0;
  int threads = 1;
};

TwoSampleTest cvm_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                             const PermutationOptions& opt = {});
TwoSampleTest ks_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                            const PermutationOptions& opt = {});

struct ErgodicOptions {
  int n_points = 1000;
  int max_iters = 15;
  double alpha = 0.05;
  int consecutive = 3;
  int average_steps = 200;
  double burn_in = 0.2;
  int bootstrap = 1000;
  double confidence = 0.95;
  PermutationOptions test;
  std::uint64_t seed = 0;
  int threads = 1;
  // How the two initial distributions differ.
  enum class Split { Halves, Weighting } split = Split::Weighting;
  // Second ensemble from another component instead.
  std::optional<int> second_component;
};

struct ErgodicReport {
  bool not_rejected = false;
  int converged_at = -1;  // first iteration of the accepted run of p > alpha
  std::string verdict;
  std::vector<double> p_values;  // per iteration, starting at 0
  double average = 0.0;          // time units
  double ci_low = 0.0;
  double ci_high = 0.0;
  int points_a = 0;
  int points_b = 0;
  int component = -1;
  std::vector<std::string> warnings;
  EnsembleHistory history_a;
  EnsembleHistory history_b;
};

ErgodicReport ergodicity_protocol(const EtcSystem& sys, const TrafficModel& model, int component,
                                  const ErgodicOptions& opt);

// Largest non-trivial, non-simple component, or -1.
int largest_complex_component(const SccDecomposition& scc);

std::string ergodic_report_json(const ErgodicReport& r, double h);
std::string history_csv(const ErgodicReport& r, double h);

}  // namespace etct
