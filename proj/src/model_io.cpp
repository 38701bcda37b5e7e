#include "etct/abstraction.hpp"

#include "etct/errors.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace etct {

using json = nlohmann::ordered_json;

namespace {

constexpr int kModelFormat = 1;
constexpr int kCacheFormat = 1;

std::string status_name(FeasibilityStatus s) {
  switch (s) {
    case FeasibilityStatus::Sat: return "sat";
    case FeasibilityStatus::Unsat: return "unsat";
    case FeasibilityStatus::Unknown: return "unknown";
  }
  return "unknown";
}

FeasibilityStatus parse_status(const std::string& s) {
  if (s == "sat") return FeasibilityStatus::Sat;
  if (s == "unsat") return FeasibilityStatus::Unsat;
  if (s == "unknown") return FeasibilityStatus::Unknown;
  throw ConfigError("bad feasibility status '" + s + "'");
}

}  // namespace

std::string model_to_json(const TrafficModel& m) {
  json j;
  j["format_version"] = kModelFormat;
  j["kind"] = "traffic_model";
  j["l"] = m.l;
  j["k_bar"] = m.k_bar;
  j["h"] = m.h;
  j["incomplete"] = m.incomplete;
  j["meta"] = {{"seed", m.seed}, {"backend", m.backend}, {"policy", m.policy}};
  json states = json::array(), outputs = json::array(), tags = json::array(), succ = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    states.push_back(m.states[i]);
    outputs.push_back(m.output(static_cast<int>(i)));
    tags.push_back(to_string(m.tags[i]));
    succ.push_back(m.successors[i]);
  }
  j["states"] = std::move(states);
  j["outputs"] = std::move(outputs);
  j["tags"] = std::move(tags);
  j["successors"] = std::move(succ);
  return j.dump(1) + "\n";
}

TrafficModel model_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("model JSON: ") + e.what());
  }
  try {
    if (j.at("format_version").get<int>() != kModelFormat) throw ConfigError("unsupported model format_version");
    if (j.at("kind").get<std::string>() != "traffic_model") throw ConfigError("not a traffic model document");
    TrafficModel m;
    m.l = j.at("l").get<int>();
    m.k_bar = j.at("k_bar").get<int>();
    m.h = j.at("h").get<double>();
    m.incomplete = j.at("incomplete").get<bool>();
    const auto& meta = j.at("meta");
    m.seed = meta.at("seed").get<std::uint64_t>();
    m.backend = meta.at("backend").get<std::string>();
    m.policy = meta.at("policy").get<std::string>();
    m.states = j.at("states").get<std::vector<KSequence>>();
    for (const auto& t : j.at("tags")) {
      const std::string s = t.get<std::string>();
      if (s == "witnessed") {
        m.tags.push_back(FeasibilityTag::Witnessed);
      } else if (s == "assumed_feasible") {
        m.tags.push_back(FeasibilityTag::AssumedFeasible);
      } else {
        throw ConfigError("bad feasibility tag '" + s + "'");
      }
    }
    m.successors = j.at("successors").get<std::vector<std::vector<int>>>();
    if (m.tags.size() != m.states.size() || m.successors.size() != m.states.size()) {
      throw ConfigError("model arrays have inconsistent lengths");
    }
    m.witnesses.assign(m.states.size(), Vector());
    if (!domino_well_formed(m)) throw ConfigError("model violates the domino rule");
    return m;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("model JSON: ") + e.what());
  }
}

std::string model_to_dot(const TrafficModel& m) {
  std::ostringstream os;
  os << "// format_version " << kModelFormat << "\n";
  os << "digraph traffic {\n";
  os << "  // l=" << m.l << " k_bar=" << m.k_bar << " h=" << m.h << (m.incomplete ? " incomplete" : "") << "\n";
  for (std::size_t i = 0; i < m.size(); ++i) {
    os << "  s" << i << " [label=\"" << to_string(m.states[i]) << "\\n" << m.output(static_cast<int>(i)) << "\"];\n";
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (int t : m.successors[i]) os << "  s" << i << " -> s" << t << ";\n";
  }
  os << "}\n";
  return os.str();
}

void FeasibilityCache::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) return;
  std::stringstream buf;
  buf << in.rdbuf();
  json j;
  try {
    j = json::parse(buf.str());
    if (j.at("format_version").get<int>() != kCacheFormat) return;
    if (j.at("fingerprint").get<std::string>() != fingerprint_) return;
  } catch (const json::exception&) {
    throw ConfigError("feasibility cache '" + path + "' is not valid JSON");
  }
  for (const auto& e : j.at("entries")) {
    Entry entry;
    entry.status = parse_status(e.at("status").get<std::string>());
    const auto w = e.at("witness").get<std::vector<double>>();
    if (!w.empty()) entry.witness = Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size()));
    put(parse_ksequence(e.at("seq").get<std::string>()), entry);
  }
}

void FeasibilityCache::save(const std::string& path) const {
  json j;
  j["format_version"] = kCacheFormat;
  j["fingerprint"] = fingerprint_;
  json entries = json::array();
  {
    std::lock_guard<std::mutex> lock(mutex_);
    for (const auto& [seq, e] : entries_) {
      std::vector<double> w(e.witness.data(), e.witness.data() + e.witness.size());
      entries.push_back({{"seq", to_string(seq)}, {"status", status_name(e.status)}, {"witness", w}});
    }
  }
  j["entries"] = std::move(entries);
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw ConfigError("cannot write feasibility cache '" + path + "'");
    out << j.dump() << "\n";
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) throw ConfigError("cannot replace feasibility cache '" + path + "'");
}

}  // namespace etct
