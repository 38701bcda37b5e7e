#include "etct/ergodic.hpp"

#include "etct/errors.hpp"
#include "etct/parallel.hpp"
#include "etct/planar_arcs.hpp"
#include "etct/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace etct {

namespace {

bool reproduces(const EtcSystem& sys, const Vector& x, const KSequence& seq) {
  const SampleTrajectory t = simulate(sys, x, static_cast<int>(seq.size()), true);
  return std::equal(seq.begin(), seq.end(), t.steps.begin());
}

Vector draw_in_arcs(const ArcSet& arcs, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, arcs.measure());
  double s = u(rng);
  for (const auto& iv : arcs.intervals()) {
    const double len = iv.hi - iv.lo;
    if (s <= len) return ArcSet::point(iv.lo + s);
    s -= len;
  }
  return ArcSet::point(arcs.intervals().back().hi);
}

// Ranks of the values on the ordered alphabet of both samples.
struct Coded {
  std::vector<int> labels;  // a first, then b
  int n_a = 0;
  int alphabet = 0;
};

Coded encode(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) throw DomainError("two-sample test needs non-empty samples");
  std::vector<double> all(a);
  all.insert(all.end(), b.begin(), b.end());
  std::vector<double> alpha(all);
  std::sort(alpha.begin(), alpha.end());
  std::vector<double> uniq;
  for (double v : alpha) {
    if (uniq.empty() || std::abs(v - uniq.back()) > 1e-12 * std::max(1.0, std::abs(v))) uniq.push_back(v);
  }
  Coded c;
  c.n_a = static_cast<int>(a.size());
  c.alphabet = static_cast<int>(uniq.size());
  c.labels.reserve(all.size());
  for (double v : all) {
    auto it = std::lower_bound(uniq.begin(), uniq.end(), v - 1e-12 * std::max(1.0, std::abs(v)));
    c.labels.push_back(static_cast<int>(it - uniq.begin()));
  }
  return c;
}

enum class Stat { Cvm, Ks };

double statistic(const std::vector<int>& labels, int n_a, int alphabet, Stat kind, std::vector<int>& ca,
                 std::vector<int>& cb) {
  std::fill(ca.begin(), ca.end(), 0);
  std::fill(cb.begin(), cb.end(), 0);
  const int n = static_cast<int>(labels.size());
  for (int i = 0; i < n_a; ++i) ++ca[labels[i]];
  for (int i = n_a; i < n; ++i) ++cb[labels[i]];
  const double na = n_a, nb = n - n_a;
  double fa = 0.0, fb = 0.0, acc = 0.0;
  for (int k = 0; k < alphabet; ++k) {
    fa += ca[k] / na;
    fb += cb[k] / nb;
    const double d = fa - fb;
    // Pooled observations at this value all see the same CDF gap.
    if (kind == Stat::Cvm) {
      acc += (ca[k] + cb[k]) * d * d;
    } else {
      acc = std::max(acc, std::abs(d));
    }
  }
  return kind == Stat::Cvm ? acc * na * nb / ((na + nb) * (na + nb)) : acc;
}

TwoSampleTest permutation_test(const std::vector<double>& a, const std::vector<double>& b,
                               const PermutationOptions& opt, Stat kind) {
  const Coded c = encode(a, b);
  std::vector<int> ca(c.alphabet), cb(c.alphabet);
  TwoSampleTest r;
  r.statistic = statistic(c.labels, c.n_a, c.alphabet, kind, ca, cb);
  r.permutations = opt.permutations;
  if (opt.permutations <= 0) return r;

  constexpr int kChunk = 256;
  const int chunks = (opt.permutations + kChunk - 1) / kChunk;
  std::vector<long long> exceed(chunks, 0);
  const double tol = 1e-12 * std::max(1.0, r.statistic);
  parallel_for(chunks, opt.threads, [&](std::size_t ci) {
    Rng rng(derive_seed(opt.seed, static_cast<std::uint64_t>(ci)));
    std::vector<int> labels = c.labels;
    std::vector<int> la(c.alphabet), lb(c.alphabet);
    const int begin = static_cast<int>(ci) * kChunk;
    const int end = std::min(opt.permutations, begin + kChunk);
    for (int p = begin; p < end; ++p) {
      std::shuffle(labels.begin(), labels.end(), rng);
      if (statistic(labels, c.n_a, c.alphabet, kind, la, lb) >= r.statistic - tol) ++exceed[ci];
    }
  });
  const long long hits = std::accumulate(exceed.begin(), exceed.end(), 0LL);
  r.p_value = (1.0 + static_cast<double>(hits)) / (1.0 + opt.permutations);
  return r;
}

std::vector<double> outputs_at(const EnsembleHistory& h, int step, double dt) {
  std::vector<double> v;
  v.reserve(h.steps.size());
  for (const auto& s : h.steps) v.push_back(s[step] * dt);
  return v;
}

}  // namespace

Ensemble seed_from_scc(const EtcSystem& sys, const TrafficModel& model, const SccDecomposition& scc, int component,
                       int n_points, const SeedOptions& opt) {
  if (component < 0 || component >= scc.count()) throw DomainError("no component with id " + std::to_string(component));
  if (!sys.is_petc()) throw DomainError("seeding needs a periodic triggering system");
  const std::vector<int>& pool = opt.pool.empty() ? scc.members[component] : opt.pool;
  if (pool.empty()) throw DomainError("empty seeding pool");

  Ensemble e;
  e.component = component;
  e.provenance = "component " + std::to_string(component) + " stream " + opt.stream;
  Rng rng(derive_seed(opt.seed, "seed/" + opt.stream));
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::normal_distribution<double> gauss;
  std::map<int, ArcSet> arcs;
  std::discrete_distribution<std::size_t> weighted;
  if (opt.measure_weighted && sys.n() == 2) {
    std::vector<double> w;
    for (int s : pool) w.push_back(arcs.emplace(s, region_arcs(isosequential_region(sys, model.states[s]))).first->second.measure());
    weighted = std::discrete_distribution<std::size_t>(w.begin(), w.end());
  }
  const long long attempts = static_cast<long long>(n_points) * opt.max_attempts_per_point;
  for (long long a = 0; a < attempts && static_cast<int>(e.points.size()) < n_points; ++a) {
    const int s = pool[opt.measure_weighted && sys.n() == 2 ? weighted(rng) : pick(rng)];
    const KSequence& seq = model.states[s];
    Vector x(sys.n());
    if (sys.n() == 2) {
      auto it = arcs.find(s);
      if (it == arcs.end()) it = arcs.emplace(s, region_arcs(isosequential_region(sys, seq))).first;
      if (it->second.is_empty() || it->second.measure() <= 0.0) continue;
      x = draw_in_arcs(it->second, rng);
    } else {
      for (int i = 0; i < x.size(); ++i) x[i] = gauss(rng);
      x.normalize();
    }
    if (reproduces(sys, x, seq)) e.points.push_back(x);
  }
  if (static_cast<int>(e.points.size()) < n_points) {
    e.warnings.push_back("only " + std::to_string(e.points.size()) + " of " + std::to_string(n_points) +
                         " seeds found within the attempt budget");
  }
  return e;
}

EnsembleHistory iterate_ensemble(const EtcSystem& sys, const Ensemble& ens, int steps, int threads) {
  EnsembleHistory h;
  h.final = ens;
  h.final.iteration += steps;
  h.steps.assign(ens.points.size(), {});
  parallel_for(ens.points.size(), threads, [&](std::size_t i) {
    const SampleTrajectory t = simulate(sys, ens.points[i], steps, true);
    h.steps[i] = t.steps;
    h.final.points[i] = t.states.back();
  });
  return h;
}

TwoSampleTest cvm_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                             const PermutationOptions& opt) {
  return permutation_test(a, b, opt, Stat::Cvm);
}

TwoSampleTest ks_two_sample(const std::vector<double>& a, const std::vector<double>& b,
                            const PermutationOptions& opt) {
  return permutation_test(a, b, opt, Stat::Ks);
}

int largest_complex_component(const SccDecomposition& scc) {
  int best = -1;
  for (int c = 0; c < scc.count(); ++c) {
    if (!scc.complex(c)) continue;
    if (best < 0 || scc.members[c].size() > scc.members[best].size()) best = c;
  }
  return best;
}

ErgodicReport ergodicity_protocol(const EtcSystem& sys, const TrafficModel& model, int component,
                                  const ErgodicOptions& opt) {
  if (opt.max_iters < 0 || opt.average_steps < 1) throw ConfigError("bad iteration counts");
  const SccDecomposition scc = scc_decompose(model);
  if (component < 0 || component >= scc.count()) throw DomainError("no component with id " + std::to_string(component));

  // Two different initial distributions: the lexicographically lower and
  // upper halves of the component's states, or another component.
  SeedOptions sa, sb;
  sa.seed = sb.seed = opt.seed;
  sa.stream = "a";
  sb.stream = "b";
  const auto& members = scc.members[component];
  if (opt.second_component) {
    sa.pool = members;
    sb.pool = scc.members.at(*opt.second_component);
  } else if (opt.split == ErgodicOptions::Split::Weighting) {
    sb.measure_weighted = true;
  } else if (members.size() >= 2) {
    const auto mid = members.begin() + static_cast<long>(members.size() / 2);
    sa.pool.assign(members.begin(), mid);
    sb.pool.assign(mid, members.end());
  }
  const Ensemble ea = seed_from_scc(sys, model, scc, component, opt.n_points, sa);
  const Ensemble eb = seed_from_scc(sys, model, scc, opt.second_component.value_or(component), opt.n_points, sb);

  ErgodicReport r;
  r.component = component;
  r.points_a = static_cast<int>(ea.points.size());
  r.points_b = static_cast<int>(eb.points.size());
  r.warnings = ea.warnings;
  r.warnings.insert(r.warnings.end(), eb.warnings.begin(), eb.warnings.end());
  if (ea.points.empty() || eb.points.empty()) throw DomainError("no seed points could be generated");

  const int horizon = std::max(opt.max_iters + opt.consecutive, opt.average_steps);
  r.history_a = iterate_ensemble(sys, ea, horizon, opt.threads);
  r.history_b = iterate_ensemble(sys, eb, horizon, opt.threads);

  int run = 0;
  for (int it = 0; it <= opt.max_iters + opt.consecutive - 1; ++it) {
    PermutationOptions po = opt.test;
    po.seed = derive_seed(opt.seed, "cvm/" + std::to_string(it));
    po.threads = opt.threads;
    const double p = cvm_two_sample(outputs_at(r.history_a, it, model.h), outputs_at(r.history_b, it, model.h), po).p_value;
    r.p_values.push_back(p);
    run = p > opt.alpha ? run + 1 : 0;
    // A run must start within max_iters.
    if (it - run + 1 > opt.max_iters) break;
    if (run >= opt.consecutive) {
      r.not_rejected = true;
      r.converged_at = it - opt.consecutive + 1;
      break;
    }
  }
  r.verdict = r.not_rejected ? "ergodicity not rejected" : "inconclusive";

  // Pooled long-run average after burn-in, bootstrap over points.
  const int skip = static_cast<int>(std::floor(opt.burn_in * opt.average_steps));
  std::vector<double> means;
  for (const auto* h : {&r.history_a, &r.history_b}) {
    for (const auto& s : h->steps) {
      double acc = 0.0;
      for (int k = skip; k < opt.average_steps; ++k) acc += s[k];
      means.push_back(acc * model.h / (opt.average_steps - skip));
    }
  }
  r.average = std::accumulate(means.begin(), means.end(), 0.0) / means.size();
  Rng rng(derive_seed(opt.seed, "bootstrap"));
  std::uniform_int_distribution<std::size_t> pick(0, means.size() - 1);
  std::vector<double> boot;
  for (int b = 0; b < opt.bootstrap; ++b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < means.size(); ++i) acc += means[pick(rng)];
    boot.push_back(acc / means.size());
  }
  std::sort(boot.begin(), boot.end());
  if (!boot.empty()) {
    const double q = (1.0 - opt.confidence) / 2.0;
    const auto at = [&](double f) {
      const std::size_t i = std::min(boot.size() - 1, static_cast<std::size_t>(std::floor(f * boot.size())));
      return boot[i];
    };
    r.ci_low = at(q);
    r.ci_high = at(1.0 - q);
  } else {
    r.ci_low = r.ci_high = r.average;
  }
  return r;
}

std::string ergodic_report_json(const ErgodicReport& r, double h) {
  nlohmann::ordered_json j;
  j["format_version"] = 1;
  j["kind"] = "ergodic_report";
  j["component"] = r.component;
  j["verdict"] = r.verdict;
  j["not_rejected"] = r.not_rejected;
  j["converged_at"] = r.converged_at;
  j["p_values"] = r.p_values;
  j["average"] = r.average;
  j["ci"] = {r.ci_low, r.ci_high};
  j["points"] = {r.points_a, r.points_b};
  j["h"] = h;
  j["warnings"] = r.warnings;
  return j.dump(1) + "\n";
}

std::string history_csv(const ErgodicReport& r, double h) {
  std::ostringstream os;
  os << "# format_version 1\nensemble,point,step,output\n";
  const char* names[] = {"a", "b"};
  const EnsembleHistory* hs[] = {&r.history_a, &r.history_b};
  for (int e = 0; e < 2; ++e) {
    for (std::size_t p = 0; p < hs[e]->steps.size(); ++p) {
      const auto& s = hs[e]->steps[p];
      for (std::size_t k = 0; k < s.size(); ++k) os << names[e] << ',' << p << ',' << k << ',' << s[k] * h << '\n';
    }
  }
  return os.str();
}

}  // namespace etct
