#include "etct/graph_metrics.hpp"

#include <json.hpp>

#include <iomanip>
#include <sstream>

namespace etct {

using json = nlohmann::ordered_json;

namespace {

json metric_json(const MetricValue& m) {
  json j;
  j["value"] = m.value;
  j["status"] = to_string(m.status);
  j["l"] = m.l;
  j["witness"] = to_string(m.witness);
  j["note"] = m.note;
  return j;
}

}  // namespace

std::string report_to_json(const MetricsReport& r) {
  json j;
  j["format_version"] = 1;
  j["kind"] = "metrics_report";
  j["l"] = r.l;
  j["states"] = r.states;
  j["largest_component"] = r.largest_component;
  j["ili"] = metric_json(r.ili);
  j["ila"] = metric_json(r.ila);
  j["sls"] = metric_json(r.sls);
  j["rob_ili"] = metric_json(r.rob_ili);
  j["rob_ila"] = metric_json(r.rob_ila);
  j["entropy_bits"] = r.entropy_bits;
  json pruned = json::array();
  for (const auto& c : r.pruned_cycles) pruned.push_back(to_string(c));
  j["pruned_cycles"] = pruned;
  j["flags"] = {{"incomplete", r.incomplete}, {"chaos_suspected", r.chaos_suspected}, {"fixed_point", r.fixed_point}};
  json curve = json::array();
  for (const auto& p : r.entropy_curve) {
    curve.push_back({{"l", p.l}, {"bits", p.bits}, {"states", p.states}, {"edges", p.edges}, {"converged", p.converged}});
  }
  j["entropy_curve"] = curve;
  j["seconds"] = r.seconds;
  return j.dump(1) + "\n";
}

std::string entropy_curve_csv(const std::vector<EntropyPoint>& curve) {
  std::ostringstream os;
  os << "# format_version 1\nl,bits\n" << std::setprecision(15);
  for (const auto& p : curve) os << p.l << ',' << p.bits << '\n';
  return os.str();
}

}  // namespace etct
