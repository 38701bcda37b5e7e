#include "etct/abstraction.hpp"

#include "etct/errors.hpp"
#include "etct/parallel.hpp"
#include "etct/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

namespace etct {

std::string to_string(OraclePolicy p) { return p == OraclePolicy::Outer ? "outer" : "inner"; }

std::string to_string(FeasibilityTag t) {
  return t == FeasibilityTag::Witnessed ? "witnessed" : "assumed_feasible";
}

std::string to_string(BackendKind b) {
  switch (b) {
    case BackendKind::Sampling: return "sampling";
    case BackendKind::Exact: return "exact";
    case BackendKind::Smt: return "smt";
  }
  return "exact";
}

OraclePolicy parse_policy(const std::string& s) {
  if (s == "outer") return OraclePolicy::Outer;
  if (s == "inner") return OraclePolicy::Inner;
  throw ConfigError("unknown oracle policy '" + s + "' (expected outer or inner)");
}

BackendKind parse_backend(const std::string& s) {
  if (s == "sampling") return BackendKind::Sampling;
  if (s == "exact") return BackendKind::Exact;
  if (s == "smt") return BackendKind::Smt;
  throw ConfigError("unknown backend '" + s + "' (expected sampling, exact or smt)");
}

std::size_t TrafficModel::edge_count() const {
  std::size_t e = 0;
  for (const auto& s : successors) e += s.size();
  return e;
}

int TrafficModel::index_of(const KSequence& s) const {
  auto it = std::lower_bound(states.begin(), states.end(), s);
  if (it == states.end() || *it != s) return -1;
  return static_cast<int>(it - states.begin());
}

void TrafficModel::rebuild_edges() {
  successors.assign(states.size(), {});
  for (std::size_t i = 0; i < states.size(); ++i) {
    const KSequence suffix(states[i].begin() + 1, states[i].end());
    auto it = std::lower_bound(states.begin(), states.end(), suffix);
    for (; it != states.end(); ++it) {
      if (!std::equal(suffix.begin(), suffix.end(), it->begin())) break;
      successors[i].push_back(static_cast<int>(it - states.begin()));
    }
  }
}

std::optional<FeasibilityCache::Entry> FeasibilityCache::get(const KSequence& s) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find(s);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void FeasibilityCache::put(const KSequence& s, const Entry& e) {
  std::lock_guard<std::mutex> lock(mutex_);
  entries_[s] = e;
}

std::size_t FeasibilityCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

std::string system_fingerprint(const EtcSystem& sys, BackendKind backend) {
  std::ostringstream os;
  os << std::setprecision(17);
  auto put = [&](const Matrix& m) {
    os << m.rows() << 'x' << m.cols() << ':';
    for (int i = 0; i < m.rows(); ++i)
      for (int j = 0; j < m.cols(); ++j) os << m(i, j) << ',';
    os << ';';
  };
  put(sys.A());
  put(sys.B());
  put(sys.K());
  put(sys.Q(0.0));
  put(sys.Q(sys.tau_bar()));
  os << sys.h() << ';' << sys.tau_bar() << ';' << static_cast<int>(sys.kind()) << ';' << to_string(backend);
  std::ostringstream hex;
  hex << std::hex << std::setw(16) << std::setfill('0') << fnv1a(os.str());
  return hex.str();
}

namespace {

using Clock = std::chrono::steady_clock;

struct Candidate {
  KSequence seq;
  Vector hint;
};

// Windows of length len seen along simulated trajectories, with the state at
// the window start as witness.
std::map<KSequence, Vector> simulated_windows(const EtcSystem& sys, int len, const BuildOptions& opt) {
  std::map<KSequence, Vector> seen;
  if (opt.n_sim <= 0) return seen;
  Rng rng(derive_seed(opt.budget.seed, "simulation/" + std::to_string(len)));
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int steps = len + std::max(0, opt.sim_length);
  Vector x(sys.n());
  for (int t = 0; t < opt.n_sim; ++t) {
    for (int j = 0; j < sys.n(); ++j) x(j) = gauss(rng);
    if (x.norm() == 0.0) continue;
    const SampleTrajectory tr = simulate(sys, x, steps, true);
    for (int start = 0; start + len <= steps; ++start) {
      KSequence w(tr.steps.begin() + start, tr.steps.begin() + start + len);
      seen.emplace(std::move(w), tr.states[start]);
    }
  }
  return seen;
}

TrafficModel extend(const EtcSystem& sys, const TrafficModel* prev, const BuildOptions& opt, BuildStats* stats) {
  if (!sys.is_petc()) throw DomainError("traffic models are built for PETC systems");
  const auto t0 = Clock::now();
  const int len = prev ? prev->l + 1 : 1;

  std::vector<Candidate> cands;
  if (!prev) {
    for (int k = 1; k <= sys.k_bar(); ++k) cands.push_back({{k}, Vector()});
  } else {
    for (std::size_t i = 0; i < prev->size(); ++i) {
      const KSequence& s = prev->states[i];
      for (int k = 1; k <= sys.k_bar(); ++k) {
        KSequence suffix(s.begin() + 1, s.end());
        suffix.push_back(k);
        if (prev->index_of(suffix) < 0) continue;
        KSequence c = s;
        c.push_back(k);
        cands.push_back({std::move(c), i < prev->witnesses.size() ? prev->witnesses[i] : Vector()});
      }
    }
  }
  std::sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.seq < b.seq; });

  const auto seen = simulated_windows(sys, len, opt);

  enum class Source { Cache, Seed, Query, Skipped };
  struct Slot {
    Source source = Source::Skipped;
    FeasibilityStatus status = FeasibilityStatus::Unknown;
    Vector witness;
  };
  std::vector<Slot> slots(cands.size());
  std::vector<std::size_t> to_query;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    if (opt.cache) {
      if (auto e = opt.cache->get(cands[i].seq)) {
        slots[i] = {Source::Cache, e->status, e->witness};
        continue;
      }
    }
    auto it = seen.find(cands[i].seq);
    if (it != seen.end()) {
      slots[i] = {Source::Seed, FeasibilityStatus::Sat, it->second};
      continue;
    }
    to_query.push_back(i);
  }

  long long allowed = static_cast<long long>(to_query.size());
  bool incomplete = prev ? prev->incomplete : false;
  if (opt.max_queries >= 0 && allowed > opt.max_queries) {
    allowed = opt.max_queries;
    incomplete = true;
  }
  std::atomic<bool> timed_out{false};
  parallel_for(static_cast<std::size_t>(allowed), opt.threads, [&](std::size_t q) {
    const std::size_t i = to_query[q];
    if (opt.max_seconds >= 0.0 &&
        std::chrono::duration<double>(Clock::now() - t0).count() > opt.max_seconds) {
      timed_out = true;
      return;
    }
    Region r = isosequential_region(sys, cands[i].seq);
    if (cands[i].hint.size() == sys.n()) r.hints.push_back(cands[i].hint);
    FeasibilityBudget b = opt.budget;
    b.seed = derive_seed(opt.budget.seed, to_string(cands[i].seq));
    const FeasibilityVerdict v = region_feasible(r, b);
    slots[i] = {Source::Query, v.status, v.witness};
  });
  if (timed_out) incomplete = true;

  TrafficModel m;
  m.l = len;
  m.k_bar = sys.k_bar();
  m.h = sys.h();
  m.seed = opt.budget.seed;
  m.backend = to_string(opt.budget.backend);
  m.policy = to_string(opt.policy);
  m.incomplete = incomplete;
  long long n_query = 0, n_seed = 0, n_cache = 0, n_unknown = 0;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const Slot& s = slots[i];
    if (s.source == Source::Query) ++n_query;
    if (s.source == Source::Seed) ++n_seed;
    if (s.source == Source::Cache) ++n_cache;
    if (opt.cache && s.source == Source::Query) opt.cache->put(cands[i].seq, {s.status, s.witness});
    bool keep = false;
    FeasibilityTag tag = FeasibilityTag::AssumedFeasible;
    if (s.status == FeasibilityStatus::Sat) {
      keep = true;
      tag = s.witness.size() == sys.n() ? FeasibilityTag::Witnessed : FeasibilityTag::AssumedFeasible;
    } else if (s.status == FeasibilityStatus::Unknown) {
      ++n_unknown;
      keep = opt.policy == OraclePolicy::Outer;
    }
    if (!keep) continue;
    m.states.push_back(cands[i].seq);
    m.tags.push_back(tag);
    m.witnesses.push_back(s.witness);
  }
  m.rebuild_edges();
  if (stats) {
    stats->queries += n_query;
    stats->seeded += n_seed;
    stats->cached += n_cache;
    stats->unknown += n_unknown;
    stats->seconds += std::chrono::duration<double>(Clock::now() - t0).count();
  }
  return m;
}

}  // namespace

TrafficModel build_model(const EtcSystem& sys, int l, const BuildOptions& opt, BuildStats* stats) {
  if (l < 1) throw DomainError("abstraction depth must be >= 1");
  TrafficModel m = extend(sys, nullptr, opt, stats);
  // Stop deepening once a budget ran out; unchecked candidates would be kept
  // and multiplied by every further level.
  while (m.l < l && !m.incomplete) m = extend(sys, &m, opt, stats);
  return m;
}

TrafficModel refine_model(const TrafficModel& model, const EtcSystem& sys, const BuildOptions& opt, BuildStats* stats) {
  if (model.k_bar != sys.k_bar() || std::abs(model.h - sys.h()) > 1e-12) {
    throw DomainError("model was built for a different system");
  }
  return extend(sys, &model, opt, stats);
}

bool refinement_fixed_point(const TrafficModel& coarse, const TrafficModel& fine) {
  if (fine.l != coarse.l + 1 || fine.size() != coarse.size()) return false;
  std::vector<int> proj(fine.size());
  std::vector<bool> hit(coarse.size(), false);
  for (std::size_t i = 0; i < fine.size(); ++i) {
    const KSequence prefix(fine.states[i].begin(), fine.states[i].end() - 1);
    const int j = coarse.index_of(prefix);
    if (j < 0 || hit[j]) return false;
    hit[j] = true;
    proj[i] = j;
  }
  std::size_t fine_edges = 0;
  for (std::size_t i = 0; i < fine.size(); ++i) {
    for (int t : fine.successors[i]) {
      const auto& cs = coarse.successors[proj[i]];
      if (!std::binary_search(cs.begin(), cs.end(), proj[t])) return false;
      ++fine_edges;
    }
  }
  return fine_edges == coarse.edge_count();
}

bool check_trace_membership(const TrafficModel& model, const KSequence& steps) {
  if (steps.empty()) return true;
  const std::size_t l = static_cast<std::size_t>(model.l);
  if (steps.size() < l) {
    auto it = std::lower_bound(model.states.begin(), model.states.end(), steps);
    return it != model.states.end() && std::equal(steps.begin(), steps.end(), it->begin());
  }
  for (std::size_t i = 0; i + l <= steps.size(); ++i) {
    const KSequence w(steps.begin() + i, steps.begin() + i + l);
    if (model.index_of(w) < 0) return false;
  }
  return true;
}

bool check_trace_membership(const TrafficModel& model, const std::vector<double>& outputs) {
  KSequence steps;
  steps.reserve(outputs.size());
  for (double y : outputs) {
    const double r = y / model.h;
    const long k = std::lround(r);
    if (std::abs(r - k) > 1e-6 || k < 1 || k > model.k_bar) return false;
    steps.push_back(static_cast<int>(k));
  }
  return check_trace_membership(model, steps);
}

bool domino_well_formed(const TrafficModel& m) {
  if (m.successors.size() != m.states.size()) return false;
  for (std::size_t i = 0; i < m.states.size(); ++i) {
    if (static_cast<int>(m.states[i].size()) != m.l) return false;
    for (int k : m.states[i]) {
      if (k < 1 || k > m.k_bar) return false;
    }
    if (i > 0 && !(m.states[i - 1] < m.states[i])) return false;
  }
  for (std::size_t i = 0; i < m.states.size(); ++i) {
    const auto& a = m.states[i];
    std::size_t expected = 0;
    for (std::size_t j = 0; j < m.states.size(); ++j) {
      if (std::equal(a.begin() + 1, a.end(), m.states[j].begin())) ++expected;
    }
    if (expected != m.successors[i].size()) return false;
    for (int t : m.successors[i]) {
      if (!std::equal(a.begin() + 1, a.end(), m.states[t].begin())) return false;
    }
  }
  return true;
}

}  // namespace etct
