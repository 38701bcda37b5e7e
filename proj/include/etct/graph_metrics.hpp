#pragma once

#include "etct/abstraction.hpp"
#include "etct/qualitative.hpp"

#include <set>

namespace etct {

using Adjacency = std::vector<std::vector<int>>;

struct SccDecomposition {
  std::vector<int> component;  // per node
  std::vector<std::vector<int>> members;  // sorted node ids per component
  std::vector<char> trivial;       // single node without self-loop
  std::vector<char> simple_cycle;  // every member has one in-component successor
  std::vector<char> reachable;

  int count() const { return static_cast<int>(members.size()); }
  // Neither trivial nor a simple cycle.
  bool complex(int c) const { return !trivial[c] && !simple_cycle[c]; }
};

// Iterative Tarjan. Every node counts as initial, so all components are
// reachable unless `initial` says otherwise.
SccDecomposition scc_decompose(const Adjacency& succ, const std::vector<char>& initial = {});
SccDecomposition scc_decompose(const TrafficModel& model);

struct Rational {
  long long num = 0;
  long long den = 1;
  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num) * b.den == static_cast<__int128>(b.num) * a.den;
  }
  friend bool operator<(const Rational& a, const Rational& b) {
    return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
  }
};

Rational make_rational(long long num, long long den);

// Integer edge weights, parallel to succ.
struct WeightedDigraph {
  Adjacency succ;
  std::vector<std::vector<long long>> weight;
  int size() const { return static_cast<int>(succ.size()); }
};

// Simple weighted transition system: each edge carries its source's output
// (in steps of h).
WeightedDigraph weighted_graph(const TrafficModel& model);

struct MeanCycle {
  Rational mean;
  std::vector<int> cycle;                     // lexicographically smallest tight cycle
  std::vector<std::vector<int>> co_minimal;   // up to max_cycles, sorted
};

// Karp's dynamic program per component (two passes, O(V) memory per pass),
// then cycle recovery on the tight subgraph of the reweighted graph.
// Throws DomainError when every cyclic component is excluded.
MeanCycle min_mean_cycle(const WeightedDigraph& g, const SccDecomposition& scc,
                         const std::set<int>& excluded = {}, int max_cycles = 16);

struct ModelCycle {
  double value = 0.0;  // time units
  Rational steps;      // mean in steps of h
  std::vector<KSequence> sigmas;  // output cycle per co-minimal state cycle
  std::vector<std::vector<int>> state_cycles;
};

ModelCycle karp_min_avg_cycle(const TrafficModel& model, const SccDecomposition& scc,
                              const std::set<int>& excluded = {}, int max_cycles = 16);

struct LimitExtremum {
  double value = 0.0;
  int state = -1;
  int component = -1;
};

// Extremal output over states in non-trivial components not in excluded.
LimitExtremum inf_lim_inf(const TrafficModel& model, const SccDecomposition& scc, const std::set<int>& excluded = {});
LimitExtremum sup_lim_sup(const TrafficModel& model, const SccDecomposition& scc, const std::set<int>& excluded = {});

// Output sequence read along a state cycle.
KSequence cycle_outputs(const TrafficModel& model, const std::vector<int>& cycle);

// Shortest cycles (up to max_len edges) through any of `targets`, staying
// inside `component`, in order of length. Stops after max_count cycles or
// step_budget DFS steps.
std::vector<std::vector<int>> cycles_through(const Adjacency& succ, const SccDecomposition& scc, int component,
                                             const std::vector<int>& targets, int max_len, int max_count,
                                             long long step_budget = 4000000);

struct SpectralRadius {
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool converged = true;
  std::string method;
};

// Largest eigenvalue of the 0/1 incidence matrix, taken over components.
SpectralRadius spectral_radius(const Adjacency& succ, const SccDecomposition& scc, double tol = 1e-10,
                               int max_iterations = 200000, int dense_limit = 2000);

struct EntropyEstimate {
  double bits = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool converged = true;
  std::string method;
};

EntropyEstimate behavioral_entropy(const TrafficModel& model, const SccDecomposition& scc);
EntropyEstimate behavioral_entropy(const TrafficModel& model);

struct UnstableMarking {
  std::set<int> components;          // pruned
  std::vector<CycleWitness> checked;  // one per simple-cycle component
  std::vector<int> checked_component;
};

UnstableMarking mark_absolutely_unstable(const TrafficModel& model, const EtcSystem& sys,
                                         const SccDecomposition& scc);

enum class MetricStatus { Exact, ExactUnderTransitivity, LowerBound, UpperBound };
std::string to_string(MetricStatus s);

struct MetricValue {
  double value = 0.0;
  MetricStatus status = MetricStatus::LowerBound;
  KSequence witness;   // output cycle, empty if none
  int l = 0;           // abstraction depth the value comes from
  std::string note;
};

struct RobustValues {
  MetricValue rob_ili;
  MetricValue rob_ila;
  bool degenerate = false;
};

RobustValues robust_values(const TrafficModel& model, const EtcSystem& sys, const SccDecomposition& scc,
                           const UnstableMarking& marking);

struct AnalyzeOptions {
  int l_max = 10;
  BuildOptions build;
  bool stop_when_exact = true;
  double max_seconds = -1.0;
  int verify_cycle_cap = 16;
};

struct EntropyPoint {
  int l = 0;
  double bits = 0.0;
  std::size_t states = 0;
  std::size_t edges = 0;
  bool converged = true;
};

struct MetricsReport {
  MetricValue ili;
  MetricValue ila;
  MetricValue sls;
  MetricValue rob_ili;
  MetricValue rob_ila;
  double entropy_bits = 0.0;
  int l = 0;
  bool incomplete = false;
  bool chaos_suspected = false;
  bool fixed_point = false;
  std::size_t states = 0;
  std::size_t largest_component = 0;
  std::vector<KSequence> pruned_cycles;
  std::vector<EntropyPoint> entropy_curve;
  double seconds = 0.0;
};

// Metrics of one model, without refinement.
MetricsReport evaluate_model(const TrafficModel& model, const EtcSystem& sys, int verify_cycle_cap = 16);

MetricsReport analyze(const EtcSystem& sys, const AnalyzeOptions& opt, TrafficModel* final_model = nullptr);

std::string report_to_json(const MetricsReport& report);
std::string entropy_curve_csv(const std::vector<EntropyPoint>& curve);

}  // namespace etct
