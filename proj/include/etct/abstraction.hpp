#pragma once

#include "etct/cone_geom.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <string>

namespace etct {

enum class OraclePolicy {
  Outer,  // UNKNOWN counts as feasible; the model simulates the system
  Inner,  // only sequences with a witness are kept
};

enum class FeasibilityTag { Witnessed, AssumedFeasible };

std::string to_string(OraclePolicy p);
std::string to_string(FeasibilityTag t);
std::string to_string(BackendKind b);
OraclePolicy parse_policy(const std::string& s);
BackendKind parse_backend(const std::string& s);

// l-complete traffic model. States are sorted lexicographically; an edge
// k1..kl -> k2..kl k' exists whenever both states exist.
struct TrafficModel {
  int l = 0;
  int k_bar = 0;
  double h = 0.0;
  std::vector<KSequence> states;
  std::vector<FeasibilityTag> tags;
  std::vector<std::vector<int>> successors;
  std::vector<Vector> witnesses;  // in memory only; empty vector when unknown
  bool incomplete = false;
  std::uint64_t seed = 0;
  std::string backend;
  std::string policy;

  std::size_t size() const { return states.size(); }
  std::size_t edge_count() const;
  double output(int i) const { return h * states[i].front(); }
  int output_steps(int i) const { return states[i].front(); }
  // -1 when absent.
  int index_of(const KSequence& s) const;
  void rebuild_edges();
};

// Thread-safe map from sequence to verdict, optionally persisted as JSON.
class FeasibilityCache {
 public:
  struct Entry {
    FeasibilityStatus status = FeasibilityStatus::Unknown;
    Vector witness;
  };

  explicit FeasibilityCache(std::string fingerprint = {}) : fingerprint_(std::move(fingerprint)) {}

  std::optional<Entry> get(const KSequence& s) const;
  void put(const KSequence& s, const Entry& e);
  std::size_t size() const;

  // Entries from a file with a different fingerprint are ignored.
  void load(const std::string& path);
  void save(const std::string& path) const;
  const std::string& fingerprint() const { return fingerprint_; }

 private:
  std::string fingerprint_;
  mutable std::mutex mutex_;
  std::map<KSequence, Entry> entries_;
};

std::string system_fingerprint(const EtcSystem& sys, BackendKind backend);

struct BuildOptions {
  OraclePolicy policy = OraclePolicy::Outer;
  FeasibilityBudget budget;
  int n_sim = 1000;               // simulated trajectories used as cheap witnesses
  int sim_length = 40;            // extra steps per seeding trajectory
  long long max_queries = -1;     // oracle calls per build; < 0 is unlimited
  double max_seconds = -1.0;      // wall-clock budget; < 0 is unlimited
  int threads = 1;
  FeasibilityCache* cache = nullptr;
};

struct BuildStats {
  long long queries = 0;
  long long seeded = 0;
  long long cached = 0;
  long long unknown = 0;
  double seconds = 0.0;
};

TrafficModel build_model(const EtcSystem& sys, int l, const BuildOptions& opt, BuildStats* stats = nullptr);
TrafficModel refine_model(const TrafficModel& model, const EtcSystem& sys, const BuildOptions& opt,
                          BuildStats* stats = nullptr);

// True when every state has exactly one extension and edges correspond, i.e.
// refinement from coarse to fine changed nothing but labels.
bool refinement_fixed_point(const TrafficModel& coarse, const TrafficModel& fine);

bool check_trace_membership(const TrafficModel& model, const KSequence& steps);
bool check_trace_membership(const TrafficModel& model, const std::vector<double>& outputs);

// Structural checks: sorted unique states of length l, domino edges.
bool domino_well_formed(const TrafficModel& model);

std::string model_to_json(const TrafficModel& model);
TrafficModel model_from_json(const std::string& text);
std::string model_to_dot(const TrafficModel& model);

}  // namespace etct
