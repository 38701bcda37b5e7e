#include "etct/graph_metrics.hpp"

#include "etct/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>

namespace etct {

namespace {

constexpr long long kInf = std::numeric_limits<long long>::max() / 4;

// Local view of one component: members and in-component edges.
struct Block {
  std::vector<int> nodes;
  std::vector<int> local;  // global -> local, -1 outside
  std::vector<std::vector<std::pair<int, long long>>> out;
};

Block make_block(const WeightedDigraph& g, const SccDecomposition& scc, int c) {
  Block b;
  b.nodes = scc.members[c];
  b.local.assign(g.size(), -1);
  for (std::size_t i = 0; i < b.nodes.size(); ++i) b.local[b.nodes[i]] = static_cast<int>(i);
  b.out.resize(b.nodes.size());
  for (std::size_t i = 0; i < b.nodes.size(); ++i) {
    const int u = b.nodes[i];
    for (std::size_t e = 0; e < g.succ[u].size(); ++e) {
      const int v = b.local[g.succ[u][e]];
      if (v >= 0) b.out[i].push_back({v, g.weight[u][e]});
    }
    std::sort(b.out[i].begin(), b.out[i].end());
  }
  return b;
}

void walk_step(const Block& b, const std::vector<long long>& cur, std::vector<long long>& next) {
  std::fill(next.begin(), next.end(), kInf);
  for (std::size_t u = 0; u < cur.size(); ++u) {
    if (cur[u] >= kInf) continue;
    for (const auto& [v, w] : b.out[u]) next[v] = std::min(next[v], cur[u] + w);
  }
}

Rational karp_block(const Block& b) {
  const int n = static_cast<int>(b.nodes.size());
  std::vector<long long> cur(n, kInf), next(n);
  cur[0] = 0;
  for (int k = 0; k < n; ++k) {
    walk_step(b, cur, next);
    cur.swap(next);
  }
  const std::vector<long long> dn = cur;

  std::vector<Rational> best(n, make_rational(-kInf, 1));
  std::vector<char> seen(n, 0);
  std::fill(cur.begin(), cur.end(), kInf);
  cur[0] = 0;
  for (int k = 0; k < n; ++k) {
    for (int v = 0; v < n; ++v) {
      if (dn[v] >= kInf || cur[v] >= kInf) continue;
      const Rational r = make_rational(dn[v] - cur[v], n - k);
      if (!seen[v] || best[v] < r) best[v] = r;
      seen[v] = 1;
    }
    walk_step(b, cur, next);
    cur.swap(next);
  }
  bool any = false;
  Rational lambda;
  for (int v = 0; v < n; ++v) {
    if (dn[v] >= kInf || !seen[v]) continue;
    if (!any || best[v] < lambda) lambda = best[v];
    any = true;
  }
  if (!any) throw NumericError("Karp found no closed walk in a cyclic component");
  return lambda;
}

// Tight edges after reweighting by the optimal mean; every simple cycle made
// of tight edges is a minimum mean cycle and vice versa.
std::vector<std::vector<int>> tight_subgraph(const Block& b, const Rational& lambda) {
  const int n = static_cast<int>(b.nodes.size());
  auto rw = [&](long long w) { return lambda.den * w - lambda.num; };
  std::vector<long long> d(n, 0);
  std::deque<int> queue;
  std::vector<char> queued(n, 1);
  for (int i = 0; i < n; ++i) queue.push_back(i);
  long long relaxations = 0;
  const long long limit = static_cast<long long>(n) * static_cast<long long>(n) * 8 + 1024;
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    queued[u] = 0;
    for (const auto& [v, w] : b.out[u]) {
      if (d[u] + rw(w) < d[v]) {
        d[v] = d[u] + rw(w);
        if (!queued[v]) {
          queued[v] = 1;
          queue.push_back(v);
        }
        if (++relaxations > limit) throw NumericError("negative cycle after reweighting by the minimum mean");
      }
    }
  }
  std::vector<std::vector<int>> tight(n);
  for (int u = 0; u < n; ++u) {
    for (const auto& [v, w] : b.out[u]) {
      if (d[u] + rw(w) == d[v]) tight[u].push_back(v);
    }
  }
  return tight;
}

// Simple cycles of a small graph in lexicographic order of their node
// sequences (each rotated to start at its smallest node).
std::vector<std::vector<int>> enumerate_cycles(const std::vector<std::vector<int>>& adj, int max_cycles,
                                               long long step_budget) {
  const int n = static_cast<int>(adj.size());
  const SccDecomposition sub = scc_decompose(adj);
  std::vector<std::vector<int>> found;
  std::vector<int> path;
  std::vector<char> on_path(n, 0);
  long long steps = 0;
  for (int s = 0; s < n && static_cast<int>(found.size()) < max_cycles; ++s) {
    const int cs = sub.component[s];
    if (sub.trivial[cs]) continue;
    // Iterative DFS over nodes > s in the same tight component.
    std::vector<std::size_t> edge_pos{0};
    path.assign(1, s);
    on_path[s] = 1;
    while (!path.empty() && static_cast<int>(found.size()) < max_cycles && steps < step_budget) {
      const int u = path.back();
      std::size_t& pos = edge_pos.back();
      if (pos >= adj[u].size()) {
        on_path[u] = 0;
        path.pop_back();
        edge_pos.pop_back();
        continue;
      }
      const int v = adj[u][pos++];
      ++steps;
      if (v == s) {
        found.push_back(path);
      } else if (v > s && !on_path[v] && sub.component[v] == cs) {
        path.push_back(v);
        on_path[v] = 1;
        edge_pos.push_back(0);
      }
    }
    for (int u : path) on_path[u] = 0;
  }
  return found;
}

std::vector<int> canonical_rotation(const std::vector<int>& c) {
  if (c.empty()) return c;
  const auto it = std::min_element(c.begin(), c.end());
  std::vector<int> r(it, c.end());
  r.insert(r.end(), c.begin(), it);
  return r;
}

KSequence canonical_sigma(const KSequence& s) {
  KSequence best = s;
  for (std::size_t i = 1; i < s.size(); ++i) {
    KSequence r(s.begin() + i, s.end());
    r.insert(r.end(), s.begin(), s.begin() + i);
    best = std::min(best, r);
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------

SccDecomposition scc_decompose(const Adjacency& succ, const std::vector<char>& initial) {
  const int n = static_cast<int>(succ.size());
  SccDecomposition r;
  r.component.assign(n, -1);
  std::vector<int> index(n, -1), low(n, 0), stack;
  std::vector<char> on_stack(n, 0);
  int counter = 0;
  struct Frame {
    int v;
    std::size_t edge;
  };
  std::vector<Frame> call;
  for (int root = 0; root < n; ++root) {
    if (index[root] >= 0) continue;
    call.push_back({root, 0});
    index[root] = low[root] = counter++;
    stack.push_back(root);
    on_stack[root] = 1;
    while (!call.empty()) {
      Frame& f = call.back();
      const int v = f.v;
      if (f.edge < succ[v].size()) {
        const int w = succ[v][f.edge++];
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          stack.push_back(w);
          on_stack[w] = 1;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          low[v] = std::min(low[v], index[w]);
        }
        continue;
      }
      if (low[v] == index[v]) {
        std::vector<int> comp;
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[w] = 0;
          r.component[w] = r.count();
          comp.push_back(w);
        } while (w != v);
        std::sort(comp.begin(), comp.end());
        r.members.push_back(std::move(comp));
      }
      call.pop_back();
      if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
    }
  }

  const int c = r.count();
  r.trivial.assign(c, 0);
  r.simple_cycle.assign(c, 0);
  for (int i = 0; i < c; ++i) {
    const auto& m = r.members[i];
    if (m.size() == 1) {
      const auto& s = succ[m[0]];
      r.trivial[i] = std::find(s.begin(), s.end(), m[0]) == s.end();
    }
    if (r.trivial[i]) continue;
    bool simple = true;
    for (int v : m) {
      int inside = 0;
      for (int w : succ[v]) inside += r.component[w] == i;
      if (inside != 1) {
        simple = false;
        break;
      }
    }
    r.simple_cycle[i] = simple;
  }

  r.reachable.assign(c, initial.empty() ? 1 : 0);
  if (!initial.empty()) {
    std::vector<char> seen(n, 0);
    std::vector<int> todo;
    for (int v = 0; v < n; ++v) {
      if (initial[v]) {
        seen[v] = 1;
        todo.push_back(v);
      }
    }
    while (!todo.empty()) {
      const int v = todo.back();
      todo.pop_back();
      r.reachable[r.component[v]] = 1;
      for (int w : succ[v]) {
        if (!seen[w]) {
          seen[w] = 1;
          todo.push_back(w);
        }
      }
    }
  }
  return r;
}

SccDecomposition scc_decompose(const TrafficModel& model) { return scc_decompose(model.successors); }

Rational make_rational(long long num, long long den) {
  if (den == 0) throw DomainError("zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const long long g = std::gcd(num < 0 ? -num : num, den);
  return {num / (g ? g : 1), den / (g ? g : 1)};
}

WeightedDigraph weighted_graph(const TrafficModel& model) {
  WeightedDigraph g;
  g.succ = model.successors;
  g.weight.resize(model.size());
  for (std::size_t i = 0; i < model.size(); ++i) {
    g.weight[i].assign(g.succ[i].size(), model.output_steps(static_cast<int>(i)));
  }
  return g;
}

MeanCycle min_mean_cycle(const WeightedDigraph& g, const SccDecomposition& scc, const std::set<int>& excluded,
                         int max_cycles) {
  std::vector<std::pair<int, Rational>> values;
  for (int c = 0; c < scc.count(); ++c) {
    if (scc.trivial[c] || !scc.reachable[c] || excluded.count(c)) continue;
    values.push_back({c, karp_block(make_block(g, scc, c))});
  }
  if (values.empty()) throw DomainError("no cycle left outside the excluded components");
  Rational best = values.front().second;
  for (const auto& [c, v] : values) best = std::min(best, v);

  MeanCycle r;
  r.mean = best;
  for (const auto& [c, v] : values) {
    if (!(v == best)) continue;
    const Block b = make_block(g, scc, c);
    const auto tight = tight_subgraph(b, best);
    for (auto cyc : enumerate_cycles(tight, max_cycles, 2000000)) {
      for (int& x : cyc) x = b.nodes[x];
      r.co_minimal.push_back(canonical_rotation(cyc));
    }
  }
  if (r.co_minimal.empty()) throw NumericError("minimum mean cycle could not be recovered");
  std::sort(r.co_minimal.begin(), r.co_minimal.end());
  if (static_cast<int>(r.co_minimal.size()) > max_cycles) r.co_minimal.resize(max_cycles);
  r.cycle = r.co_minimal.front();
  return r;
}

KSequence cycle_outputs(const TrafficModel& model, const std::vector<int>& cycle) {
  KSequence s;
  s.reserve(cycle.size());
  for (int v : cycle) s.push_back(model.output_steps(v));
  return s;
}

ModelCycle karp_min_avg_cycle(const TrafficModel& model, const SccDecomposition& scc, const std::set<int>& excluded,
                              int max_cycles) {
  const MeanCycle mc = min_mean_cycle(weighted_graph(model), scc, excluded, max_cycles);
  ModelCycle r;
  r.steps = mc.mean;
  r.value = mc.mean.value() * model.h;
  std::set<KSequence> seen;
  for (const auto& c : mc.co_minimal) {
    const KSequence sigma = canonical_sigma(cycle_outputs(model, c));
    if (!seen.insert(sigma).second) continue;
    r.sigmas.push_back(sigma);
    r.state_cycles.push_back(c);
  }
  return r;
}

namespace {

LimitExtremum extremum(const TrafficModel& model, const SccDecomposition& scc, const std::set<int>& excluded,
                       bool minimum) {
  LimitExtremum r;
  for (std::size_t v = 0; v < model.size(); ++v) {
    const int c = scc.component[v];
    if (scc.trivial[c] || !scc.reachable[c] || excluded.count(c)) continue;
    const double y = model.output(static_cast<int>(v));
    if (r.state < 0 || (minimum ? y < r.value : y > r.value)) {
      r.value = y;
      r.state = static_cast<int>(v);
      r.component = c;
    }
  }
  if (r.state < 0) throw DomainError("no cycle left outside the excluded components");
  return r;
}

}  // namespace

LimitExtremum inf_lim_inf(const TrafficModel& model, const SccDecomposition& scc, const std::set<int>& excluded) {
  return extremum(model, scc, excluded, true);
}

LimitExtremum sup_lim_sup(const TrafficModel& model, const SccDecomposition& scc, const std::set<int>& excluded) {
  return extremum(model, scc, excluded, false);
}

std::vector<std::vector<int>> cycles_through(const Adjacency& succ, const SccDecomposition& scc, int component,
                                             const std::vector<int>& targets, int max_len, int max_count,
                                             long long step_budget) {
  long long steps = 0;
  const auto& nodes = scc.members.at(component);
  std::vector<int> local(succ.size(), -1);
  for (std::size_t i = 0; i < nodes.size(); ++i) local[nodes[i]] = static_cast<int>(i);
  const int n = static_cast<int>(nodes.size());
  Adjacency out(n), in(n);
  for (int i = 0; i < n; ++i) {
    for (int w : succ[nodes[i]]) {
      if (local[w] >= 0) {
        out[i].push_back(local[w]);
        in[local[w]].push_back(i);
      }
    }
  }

  std::vector<std::vector<int>> found;
  std::set<std::vector<int>> seen;
  std::vector<int> dist(n);
  for (int len = 1; len <= max_len && static_cast<int>(found.size()) < max_count; ++len) {
    for (int t_global : targets) {
      if (static_cast<int>(found.size()) >= max_count) break;
      const int t = local[t_global];
      if (t < 0) continue;
      // Distance back to t prunes paths that cannot close in time.
      std::fill(dist.begin(), dist.end(), std::numeric_limits<int>::max());
      std::deque<int> q{t};
      dist[t] = 0;
      while (!q.empty()) {
        const int v = q.front();
        q.pop_front();
        for (int u : in[v]) {
          if (dist[u] == std::numeric_limits<int>::max()) {
            dist[u] = dist[v] + 1;
            q.push_back(u);
          }
        }
      }
      std::vector<int> path{t};
      std::vector<std::size_t> pos{0};
      std::vector<char> on(n, 0);
      on[t] = 1;
      while (!path.empty() && static_cast<int>(found.size()) < max_count && steps++ < step_budget) {
        const int u = path.back();
        if (pos.back() >= out[u].size()) {
          on[u] = 0;
          path.pop_back();
          pos.pop_back();
          continue;
        }
        const int v = out[u][pos.back()++];
        const int used = static_cast<int>(path.size());
        if (v == t) {
          if (used == len) {
            std::vector<int> cyc;
            for (int x : path) cyc.push_back(nodes[x]);
            cyc = canonical_rotation(cyc);
            if (seen.insert(cyc).second) found.push_back(cyc);
          }
          continue;
        }
        if (on[v] || used + dist[v] > len) continue;
        path.push_back(v);
        pos.push_back(0);
        on[v] = 1;
      }
    }
  }
  return found;
}

SpectralRadius spectral_radius(const Adjacency& succ, const SccDecomposition& scc, double tol, int max_iterations,
                               int dense_limit) {
  SpectralRadius best;
  best.method = "acyclic";
  auto consider = [&](const SpectralRadius& r) {
    if (r.value > best.value || best.method == "acyclic") {
      const bool keep_flag = best.converged;
      best = r;
      best.converged = r.converged && keep_flag;
    } else {
      best.converged = best.converged && r.converged;
      best.upper = std::max(best.upper, r.upper);
    }
  };
  for (int c = 0; c < scc.count(); ++c) {
    if (scc.trivial[c] || !scc.reachable[c]) continue;
    if (scc.simple_cycle[c]) {
      consider({1.0, 1.0, 1.0, true, "simple cycle"});
      continue;
    }
    const auto& nodes = scc.members[c];
    const int n = static_cast<int>(nodes.size());
    std::vector<int> local(succ.size(), -1);
    for (int i = 0; i < n; ++i) local[nodes[i]] = i;
    Adjacency out(n);
    for (int i = 0; i < n; ++i) {
      for (int w : succ[nodes[i]]) {
        if (local[w] >= 0) out[i].push_back(local[w]);
      }
    }
    // Power iteration on T + I (primitive for irreducible T) with
    // Collatz-Wielandt bounds.
    Eigen::VectorXd x = Eigen::VectorXd::Ones(n), y(n);
    SpectralRadius r;
    r.converged = false;
    r.method = "power iteration";
    double lo = 0.0, hi = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
      for (int i = 0; i < n; ++i) {
        double s = x[i];
        for (int j : out[i]) s += x[j];
        y[i] = s;
      }
      lo = std::numeric_limits<double>::infinity();
      hi = 0.0;
      for (int i = 0; i < n; ++i) {
        const double q = y[i] / x[i];
        lo = std::min(lo, q);
        hi = std::max(hi, q);
      }
      x = y / y.maxCoeff();
      if (hi - lo <= tol * hi) {
        r.converged = true;
        break;
      }
    }
    r.lower = lo - 1.0;
    r.upper = hi - 1.0;
    r.value = 0.5 * (lo + hi) - 1.0;
    if (!r.converged && n <= dense_limit) {
      Eigen::MatrixXd T = Eigen::MatrixXd::Zero(n, n);
      for (int i = 0; i < n; ++i) {
        for (int j : out[i]) T(i, j) += 1.0;
      }
      const double rho = T.eigenvalues().cwiseAbs().maxCoeff();
      r = {rho, rho, rho, true, "dense eigensolver"};
    }
    consider(r);
  }
  return best;
}

EntropyEstimate behavioral_entropy(const TrafficModel& model, const SccDecomposition& scc) {
  const SpectralRadius r = spectral_radius(model.successors, scc);
  auto bits = [](double rho) { return rho > 1.0 ? std::log2(rho) : 0.0; };
  EntropyEstimate e;
  e.bits = bits(r.value);
  e.lower = bits(r.lower);
  e.upper = bits(r.upper);
  e.converged = r.converged;
  e.method = r.method;
  return e;
}

EntropyEstimate behavioral_entropy(const TrafficModel& model) { return behavioral_entropy(model, scc_decompose(model)); }

UnstableMarking mark_absolutely_unstable(const TrafficModel& model, const EtcSystem& sys,
                                         const SccDecomposition& scc) {
  UnstableMarking m;
  for (int c = 0; c < scc.count(); ++c) {
    if (!scc.simple_cycle[c] || !scc.reachable[c]) continue;
    std::vector<int> cyc;
    int v = scc.members[c].front();
    do {
      cyc.push_back(v);
      int next = -1;
      for (int w : model.successors[v]) {
        if (scc.component[w] == c) next = w;
      }
      v = next;
    } while (v != cyc.front());
    const KSequence sigma = canonical_sigma(cycle_outputs(model, cyc));
    CycleWitness w = verify_cycle(sys, sigma);
    const InstabilityResult ir = instability_check(sys, sigma, SccContext{true, model.l});
    if (ir.classification == CycleClass::AbsolutelyUnstable) {
      w.classification = CycleClass::AbsolutelyUnstable;
      m.components.insert(c);
    }
    if (!w.note.empty()) w.note += "; ";
    w.note += ir.reason;
    m.checked.push_back(std::move(w));
    m.checked_component.push_back(c);
  }
  return m;
}

std::string to_string(MetricStatus s) {
  switch (s) {
    case MetricStatus::Exact: return "Exact";
    case MetricStatus::ExactUnderTransitivity: return "ExactUnderTransitivity";
    case MetricStatus::LowerBound: return "LowerBound";
    case MetricStatus::UpperBound: return "UpperBound";
  }
  return "?";
}

namespace {

bool all_cycles_simple(const SccDecomposition& scc) {
  for (int c = 0; c < scc.count(); ++c) {
    if (scc.reachable[c] && scc.complex(c)) return false;
  }
  return true;
}

// Limit-inferior style metric: value at an extremal state; exact once a
// concrete cycle through such a state is verified.
MetricValue extremal_metric(const TrafficModel& model, const EtcSystem& sys, const SccDecomposition& scc,
                            const std::set<int>& excluded, bool minimum, bool robust, int cap) {
  const LimitExtremum ext = minimum ? inf_lim_inf(model, scc, excluded) : sup_lim_sup(model, scc, excluded);
  MetricValue mv;
  mv.value = ext.value;
  mv.l = model.l;
  mv.status = minimum ? MetricStatus::LowerBound : MetricStatus::UpperBound;
  const int steps = static_cast<int>(std::lround(ext.value / model.h));
  for (int c = 0; c < scc.count(); ++c) {
    if (scc.trivial[c] || !scc.reachable[c] || excluded.count(c)) continue;
    std::vector<int> targets;
    for (int v : scc.members[c]) {
      if (model.output_steps(v) == steps) targets.push_back(v);
    }
    if (targets.empty()) continue;
    const auto cycles = cycles_through(model.successors, scc, c, targets, std::max(32, 2 * model.l), cap, 4000000);
    for (const auto& cyc : cycles) {
      const KSequence sigma = canonical_sigma(cycle_outputs(model, cyc));
      const CycleWitness w = verify_cycle(sys, sigma);
      if (mv.witness.empty()) mv.witness = sigma;
      if (!w.verified) continue;
      mv.witness = sigma;
      if (!robust) {
        mv.status = MetricStatus::Exact;
        mv.note = "verified cycle attains the value";
        return mv;
      }
      if (w.classification == CycleClass::Stable) {
        mv.status = MetricStatus::Exact;
        mv.note = "verified stable cycle attains the value";
        return mv;
      }
      if (scc.complex(c)) {
        mv.status = MetricStatus::ExactUnderTransitivity;
        mv.note =
            "assumes topological transitivity of the invariant set: by the Birkhoff Transitivity Theorem a dense "
            "orbit visits Q_y infinitely often; verified cycle lies in a non-simple component";
        return mv;
      }
    }
  }
  return mv;
}

MetricValue average_metric(const TrafficModel& model, const EtcSystem& sys, const SccDecomposition& scc,
                           const std::set<int>& excluded, bool robust, int cap) {
  const ModelCycle mc = karp_min_avg_cycle(model, scc, excluded, cap);
  MetricValue mv;
  mv.value = mc.value;
  mv.l = model.l;
  mv.status = MetricStatus::LowerBound;
  mv.witness = mc.sigmas.front();
  const bool simple = all_cycles_simple(scc);
  for (const auto& sigma : mc.sigmas) {
    const CycleWitness w = verify_cycle(sys, sigma);
    if (!w.verified) continue;
    if (!robust) {
      mv.witness = sigma;
      mv.status = MetricStatus::Exact;
      mv.note = "verified minimum average cycle";
      return mv;
    }
    if (simple && !model.incomplete) {
      mv.witness = sigma;
      mv.status = MetricStatus::Exact;
      mv.note = "all components are simple cycles and the minimizing cycle is verified";
      return mv;
    }
    if (w.classification == CycleClass::Stable && !model.incomplete) {
      mv.witness = sigma;
      mv.status = MetricStatus::Exact;
      mv.note = "verified stable minimizing cycle";
      return mv;
    }
  }
  return mv;
}

}  // namespace

RobustValues robust_values(const TrafficModel& model, const EtcSystem& sys, const SccDecomposition& scc,
                           const UnstableMarking& marking) {
  RobustValues r;
  bool any = false;
  for (int c = 0; c < scc.count(); ++c) {
    any = any || (!scc.trivial[c] && scc.reachable[c] && !marking.components.count(c));
  }
  if (!any) {
    r.degenerate = true;
    r.rob_ili.note = r.rob_ila.note = "every cycle was pruned as absolutely unstable";
    r.rob_ili.l = r.rob_ila.l = model.l;
    return r;
  }
  r.rob_ili = extremal_metric(model, sys, scc, marking.components, true, true, 16);
  r.rob_ila = average_metric(model, sys, scc, marking.components, true, 16);
  return r;
}

MetricsReport evaluate_model(const TrafficModel& model, const EtcSystem& sys, int cap) {
  MetricsReport rep;
  const SccDecomposition scc = scc_decompose(model);
  rep.l = model.l;
  rep.states = model.size();
  rep.incomplete = model.incomplete;
  for (int c = 0; c < scc.count(); ++c) {
    if (!scc.trivial[c]) rep.largest_component = std::max(rep.largest_component, scc.members[c].size());
    rep.chaos_suspected = rep.chaos_suspected || (scc.reachable[c] && scc.complex(c));
  }
  const EntropyEstimate e = behavioral_entropy(model, scc);
  rep.entropy_bits = e.bits;
  rep.entropy_curve.push_back({model.l, e.bits, model.size(), model.edge_count(), e.converged});

  rep.ili = extremal_metric(model, sys, scc, {}, true, false, cap);
  rep.sls = extremal_metric(model, sys, scc, {}, false, false, cap);
  rep.ila = average_metric(model, sys, scc, {}, false, cap);

  const UnstableMarking marking = mark_absolutely_unstable(model, sys, scc);
  for (int c : marking.components) {
    for (std::size_t i = 0; i < marking.checked.size(); ++i) {
      if (marking.checked_component[i] == c) rep.pruned_cycles.push_back(marking.checked[i].sigma);
    }
  }
  const RobustValues rv = robust_values(model, sys, scc, marking);
  rep.rob_ili = rv.rob_ili;
  rep.rob_ila = rv.rob_ila;
  return rep;
}

MetricsReport analyze(const EtcSystem& sys, const AnalyzeOptions& opt, TrafficModel* final_model) {
  if (!sys.is_petc()) throw DomainError("analysis needs a periodic triggering system");
  if (opt.l_max < 1) throw ConfigError("l_max must be at least 1");
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };

  MetricsReport rep;
  TrafficModel model = build_model(sys, 1, opt.build);
  // Exact values are final. A transitivity-based value rests on an assumption
  // that a finer model may contradict, so it is always replaced.
  auto merge = [](MetricValue& kept, const MetricValue& fresh, bool first) {
    if (first || kept.status != MetricStatus::Exact) kept = fresh;
  };
  for (int l = 1;; ++l) {
    const MetricsReport cur = evaluate_model(model, sys, opt.verify_cycle_cap);
    const bool first = l == 1;
    merge(rep.ili, cur.ili, first);
    merge(rep.ila, cur.ila, first);
    merge(rep.rob_ili, cur.rob_ili, first);
    merge(rep.rob_ila, cur.rob_ila, first);
    if (first || rep.sls.status != MetricStatus::Exact) rep.sls = cur.sls;
    rep.entropy_bits = cur.entropy_bits;
    rep.l = cur.l;
    rep.states = cur.states;
    rep.largest_component = cur.largest_component;
    rep.chaos_suspected = cur.chaos_suspected;
    rep.pruned_cycles = cur.pruned_cycles;
    rep.incomplete = rep.incomplete || cur.incomplete;
    rep.entropy_curve.push_back(cur.entropy_curve.front());

    const auto fixed = [](const MetricValue& m) { return m.status == MetricStatus::Exact; };
    const bool done = fixed(rep.ili) && fixed(rep.ila) && fixed(rep.rob_ili) && fixed(rep.rob_ila);
    // Refining an incomplete model would multiply its unchecked states.
    if ((opt.stop_when_exact && done) || rep.fixed_point || l >= opt.l_max || cur.incomplete) break;
    if (opt.max_seconds >= 0 && elapsed() > opt.max_seconds) {
      rep.incomplete = true;
      break;
    }
    TrafficModel fine = refine_model(model, sys, opt.build);
    rep.fixed_point = refinement_fixed_point(model, fine);
    model = std::move(fine);
  }
  rep.seconds = elapsed();
  if (final_model) *final_model = std::move(model);
  return rep;
}

}  // namespace etct
