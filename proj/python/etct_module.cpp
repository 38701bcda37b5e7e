#include "etct/config.hpp"
#include "etct/errors.hpp"
#include "etct/ist_bounds.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

namespace py = pybind11;
using namespace etct;

namespace {

py::object loads(const std::string& text) { return py::module_::import("json").attr("loads")(text); }

EtcSystem relative_error_system(const Matrix& A, const Matrix& B, const Matrix& K, double sigma, const std::string& kind,
                                double h, double tau_bar) {
  SystemKind k;
  if (kind == "petc") {
    k = SystemKind::PETC;
  } else if (kind == "cetc") {
    k = SystemKind::CETC;
  } else {
    throw ConfigError("kind must be petc or cetc");
  }
  return EtcSystem(A, B, K, RelativeErrorTrigger{sigma}, k, h, tau_bar);
}

BuildOptions build_options(const std::string& backend, const std::string& policy, std::uint64_t seed, int threads) {
  BuildOptions o;
  o.budget.backend = parse_backend(backend);
  o.budget.seed = seed;
  o.policy = parse_policy(policy);
  o.threads = threads;
  return o;
}

}  // namespace

PYBIND11_MODULE(etct, m) {
  m.doc() = "Traffic models and sampling metrics of event-triggered linear systems";

  // Later registrations are tried first, so the base class goes first.
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  py::class_<EtcSystem>(m, "System")
      .def_static("from_config", [](const std::string& text) { return make_system(parse_config(text)); },
                  py::arg("config_json"))
      .def_static("relative_error", &relative_error_system, py::arg("A"), py::arg("B"), py::arg("K"), py::arg("sigma"),
                  py::arg("kind") = "petc", py::arg("h") = 0.05, py::arg("tau_bar") = 1.0)
      .def_property_readonly("n", &EtcSystem::n)
      .def_property_readonly("h", &EtcSystem::h)
      .def_property_readonly("tau_bar", &EtcSystem::tau_bar)
      .def_property_readonly("k_bar", &EtcSystem::k_bar)
      .def_property_readonly("is_petc", &EtcSystem::is_petc)
      .def("M", [](const EtcSystem& s, double t) { return build_M(s, t); }, py::arg("s"))
      .def("N", [](const EtcSystem& s, double t) { return build_N(s, t).N; }, py::arg("s"))
      .def("tau", [](const EtcSystem& s, const Vector& x) { return tau(s, x); }, py::arg("x"))
      .def("sample_map",
           [](const EtcSystem& s, const Vector& x) {
             const SampleStep st = sample_map(s, x);
             return py::make_tuple(st.x_next, st.y);
           },
           py::arg("x"))
      .def("simulate",
           [](const EtcSystem& s, const Vector& x0, int n) {
             const SampleTrajectory t = simulate(s, x0, n, true);
             Matrix X(t.states.size(), s.n());
             for (std::size_t i = 0; i < t.states.size(); ++i) X.row(i) = t.states[i].transpose();
             return py::make_tuple(X, t.outputs);
           },
           py::arg("x0"), py::arg("n"));

  py::class_<TrafficModel>(m, "Model")
      .def_readonly("l", &TrafficModel::l)
      .def_readonly("h", &TrafficModel::h)
      .def_readonly("incomplete", &TrafficModel::incomplete)
      .def_readonly("states", &TrafficModel::states)
      .def_readonly("successors", &TrafficModel::successors)
      .def("__len__", &TrafficModel::size)
      .def("edge_count", &TrafficModel::edge_count)
      .def("index_of", &TrafficModel::index_of)
      .def("outputs",
           [](const TrafficModel& mdl) {
             std::vector<double> y;
             for (std::size_t i = 0; i < mdl.size(); ++i) y.push_back(mdl.output(static_cast<int>(i)));
             return y;
           })
      .def("to_json", &model_to_json)
      .def("to_dot", &model_to_dot)
      .def_static("from_json", &model_from_json)
      .def("entropy", [](const TrafficModel& mdl) { return behavioral_entropy(mdl).bits; })
      .def("components", [](const TrafficModel& mdl) { return scc_decompose(mdl).members; });

  m.def("build_model",
        [](const EtcSystem& sys, int l, const std::string& backend, const std::string& policy, std::uint64_t seed,
           int threads) { return build_model(sys, l, build_options(backend, policy, seed, threads)); },
        py::arg("system"), py::arg("l"), py::arg("backend") = "exact", py::arg("policy") = "outer",
        py::arg("seed") = 1, py::arg("threads") = 1);
  m.def("refine_model",
        [](const TrafficModel& mdl, const EtcSystem& sys, const std::string& backend, const std::string& policy,
           std::uint64_t seed) { return refine_model(mdl, sys, build_options(backend, policy, seed, 1)); },
        py::arg("model"), py::arg("system"), py::arg("backend") = "exact", py::arg("policy") = "outer",
        py::arg("seed") = 1);

  m.def("inf_ist", [](const EtcSystem& s) { return inf_ist(s).value; });
  m.def("sup_ist", [](const EtcSystem& s) { return sup_ist(s).value; });

  m.def("verify_cycle",
        [](const EtcSystem& sys, const KSequence& sigma) {
          const CycleWitness w = verify_cycle(sys, sigma);
          py::dict d;
          d["verified"] = w.verified;
          d["classification"] = to_string(w.classification);
          d["average"] = w.average(sys.h());
          d["schur"] = schur_check(w.M_sigma);
          d["conclusive"] = w.conclusive;
          return d;
        },
        py::arg("system"), py::arg("cycle"));
  m.def("schur_check", [](const Matrix& M) { return schur_check(M); });

  m.def("fixed_lines",
        [](const EtcSystem& sys) {
          py::list out;
          for (const FixedLine& f : fixed_oline_search_cetc(sys)) {
            py::dict d;
            d["t"] = f.t;
            d["eigenvalue"] = f.eigenvalue;
            d["direction"] = f.direction;
            d["attractive"] = attractivity_check(sys, f.direction).attractive;
            out.append(d);
          }
          return out;
        },
        py::arg("system"));

  m.def("analyze",
        [](const EtcSystem& sys, int l_max, bool stop_when_exact, const std::string& backend) {
          AnalyzeOptions o;
          o.l_max = l_max;
          o.stop_when_exact = stop_when_exact;
          o.build = build_options(backend, "outer", 1, 1);
          return loads(report_to_json(analyze(sys, o)));
        },
        py::arg("system"), py::arg("l_max") = 10, py::arg("stop_when_exact") = true, py::arg("backend") = "exact");

  m.def("cvm_two_sample",
        [](const std::vector<double>& a, const std::vector<double>& b, int permutations, std::uint64_t seed) {
          const TwoSampleTest t = cvm_two_sample(a, b, {permutations, seed, 1});
          return py::make_tuple(t.statistic, t.p_value);
        },
        py::arg("a"), py::arg("b"), py::arg("permutations") = 9999, py::arg("seed") = 0);
  m.def("ks_two_sample",
        [](const std::vector<double>& a, const std::vector<double>& b, int permutations, std::uint64_t seed) {
          const TwoSampleTest t = ks_two_sample(a, b, {permutations, seed, 1});
          return py::make_tuple(t.statistic, t.p_value);
        },
        py::arg("a"), py::arg("b"), py::arg("permutations") = 9999, py::arg("seed") = 0);

  m.def("ergodicity_protocol",
        [](const EtcSystem& sys, const TrafficModel& mdl, std::optional<int> component, int n_points, int max_iters,
           std::uint64_t seed) {
          int c = component.value_or(largest_complex_component(scc_decompose(mdl)));
          if (c < 0) throw DomainError("model has no non-simple component");
          ErgodicOptions o;
          o.n_points = n_points;
          o.max_iters = max_iters;
          o.seed = seed;
          return loads(ergodic_report_json(ergodicity_protocol(sys, mdl, c, o), sys.h()));
        },
        py::arg("system"), py::arg("model"), py::arg("component") = py::none(), py::arg("n_points") = 1000,
        py::arg("max_iters") = 15, py::arg("seed") = 0);

  m.def("config_roundtrip", [](const std::string& text) { return config_to_json(parse_config(text)); });
}
