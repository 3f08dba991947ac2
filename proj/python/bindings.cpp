#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "mmd/design.hpp"
#include "mmd/error.hpp"
#include "mmd/estimation.hpp"
#include "mmd/io.hpp"
#include "mmd/minimax.hpp"
#include "mmd/sim.hpp"
#include "mmd/variance.hpp"
#include "mmd/verify.hpp"

namespace py = pybind11;
using namespace mmd;

namespace {

// JSON crosses the boundary as text; the Python side parses it.
ExperimentParams params_from(const std::string& text) {
  const json j = json::parse(text);
  ExperimentParams e;
  e.N = j.value("N", 20);
  e.T = j.value("T", 0);
  e.p = j.value("p", 1);
  e.q1 = j.value("q1", 0.6);
  e.q2 = j.value("q2", 0.4);
  e.r1 = j.value("r", 0.5);
  e.psi_d = j.value("psi_d", 0.5);
  e.psi_s = j.value("psi_s", 1 - e.psi_d);
  e.B = j.value("B", 1.0);
  e.validate();
  return e;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "native core of mmdesign";
  m.attr("SCHEMA_VERSION") = kSchemaVersion;

  static py::exception<Error> exc(m, "MmdError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(exc, (e.code() + ": " + e.what()).c_str());
    }
  });

  m.def("standard_design", [](const std::string& kind, int T, int p) {
    return make_standard_design(parse_standard_kind(kind), T, p).points;
  }, py::arg("kind"), py::arg("T"), py::arg("p"));

  m.def("optimal_design", [](const std::string& params) {
    const DesignSearchResult r = optimal_design(params_from(params));
    json j;
    j["theta_star"] = r.theta_star;
    j["a_star"] = r.a_star;
    j["b_star"] = r.b_star;
    j["case"] = r.equal_ends ? "equal_ends" : "longer_last_gap";
    j["objective"] = r.objective;
    j["design"] = design_to_json(r.design);
    return j.dump();
  }, py::arg("params_json"));

  m.def("closed_form_design", [](const std::string& params) {
    const ClosedFormResult r = closed_form_design(params_from(params));
    json j;
    j["theta_star"] = r.theta_star;
    j["source"] = r.source;
    j["fallback"] = r.fallback;
    j["design"] = design_to_json(r.design);
    return j.dump();
  }, py::arg("params_json"));

  m.def("theta_star", [](const std::string& params) { return gamma_coefficients(params_from(params)).theta; },
        py::arg("params_json"));

  m.def("worst_case_objective", [](const std::vector<int>& points, const std::string& params) {
    const ExperimentParams e = params_from(params);
    const GeneralObjective g = worst_case_objective_general(Design::make(e.T, points), e);
    json j;
    j["regime"] = to_string(g.regime);
    j["value"] = g.value ? json(*g.value) : json(nullptr);
    j["large_n"] = g.large_n;
    j["small_n"] = g.small_n;
    return j.dump();
  }, py::arg("decision_points"), py::arg("params_json"));

  m.def("simulate", [](const std::string& config, std::uint64_t seed, int workers) {
    const ScenarioConfig cfg = parse_scenario(json::parse(config));
    py::gil_scoped_release nogil;
    return run_scenario(cfg, RunOptions{seed, workers}).dump();
  }, py::arg("config_json"), py::arg("seed"), py::arg("workers") = 1);

  m.def("report_to_csv", [](const std::string& report) { return report_to_csv(json::parse(report)); },
        py::arg("report_json"));

  m.def("estimate", [](const std::string& trajectory_csv, const std::vector<int>& points, int p, double q1, double q2,
                       double alpha) {
    std::istringstream is(trajectory_csv);
    const Trajectory tr = read_trajectory_csv(is);
    const Design d = Design::make(tr.T, points);
    const AssignmentPolicy pol{d, q1, q2, 0.5};
    auto est = ht_all(tr, DecisionContext(d, p), pol);
    json out = json::array();
    const bool var = is_block_structured(d, p);
    for (auto& e : est) {
      json j;
      j["estimand"] = to_string(e.id);
      j["estimate"] = e.point;
      if (var) {
        const double v = conservative_variance_estimate(block_structure(d, p), tr, VarianceParams{q1, q2}, e.id);
        const auto ci = confidence_interval(e.point, v, alpha);
        j["variance"] = v;
        j["ci"] = {ci.first, ci.second};
      } else {
        j["variance"] = nullptr;
        j["ci"] = nullptr;
      }
      out.push_back(j);
    }
    return out.dump();
  }, py::arg("trajectory_csv"), py::arg("decision_points"), py::arg("p"), py::arg("q1") = 0.6, py::arg("q2") = 0.4,
     py::arg("alpha") = 0.05);

  m.def("verify", [](std::uint64_t seed) {
    json out = json::array();
    for (const auto& r : run_oracle_suite(seed)) out.push_back({{"name", r.name}, {"passed", r.passed}, {"max_error", r.max_error}});
    return out.dump();
  }, py::arg("seed") = 20240501);
}
