// mmd: minimax designs, simulation and design-based inference for time-series experiments.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "mmd/design.hpp"
#include "mmd/engine.hpp"
#include "mmd/error.hpp"
#include "mmd/estimation.hpp"
#include "mmd/io.hpp"
#include "mmd/minimax.hpp"
#include "mmd/sim.hpp"
#include "mmd/variance.hpp"
#include "mmd/verify.hpp"

using namespace mmd;

namespace {

constexpr std::uint64_t kVerifySeed = 20240501;

struct Globals {
  std::string format = "json";
  bool quiet = false;
  std::string out;
};

struct ParamFlags {
  int N = 20;
  int T = 0;
  int p = 1;
  double q1 = 0.6;
  double q2 = 0.4;
  double r = 0.5;
  double psi_d = 0.5;
  std::optional<double> psi_s;
  double B = 1.0;

  ExperimentParams get() const {
    ExperimentParams e;
    e.N = N;
    e.T = T;
    e.p = p;
    e.q1 = q1;
    e.q2 = q2;
    e.r1 = r;
    e.psi_d = psi_d;
    e.psi_s = psi_s.value_or(1 - psi_d);
    e.B = B;
    e.validate();
    return e;
  }
};

void add_param_flags(CLI::App* sc, ParamFlags& f, bool need_T) {
  auto* t = sc->add_option("--T", f.T, "Horizon (number of periods)");
  if (need_T) t->required();
  sc->add_option("--N", f.N, "Number of units")->capture_default_str();
  sc->add_option("--p", f.p, "Carryover order")->capture_default_str();
  sc->add_option("--q1", f.q1, "First treated probability")->capture_default_str();
  sc->add_option("--q2", f.q2, "Second treated probability")->capture_default_str();
  sc->add_option("--r", f.r, "Chance of selecting q1 at each decision point")->capture_default_str();
  sc->add_option("--psi-d", f.psi_d, "Weight on direct-effect risk")->capture_default_str();
  sc->add_option("--psi-s", f.psi_s, "Weight on spillover-effect risk (default 1 - psi-d)");
  sc->add_option("--B", f.B, "Outcome bound")->capture_default_str();
}

void emit(const Globals& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    std::cout.flush();
  } else {
    write_text_file(g.out, text);
  }
}

void emit_json(const Globals& g, const json& j) { emit(g, j.dump(2) + "\n"); }

void progress(const Globals& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << '\n';
}

std::string csv_join(const std::vector<int>& v) {
  std::string s;
  for (int x : v) s += (s.empty() ? "" : " ") + std::to_string(x);
  return s;
}

json params_json(const ExperimentParams& e) {
  json j;
  j["N"] = e.N;
  j["T"] = e.T;
  j["p"] = e.p;
  j["q1"] = e.q1;
  j["q2"] = e.q2;
  j["r"] = e.r1;
  j["psi_d"] = e.psi_d;
  j["psi_s"] = e.psi_s;
  j["B"] = e.B;
  return j;
}

json objective_json(const GeneralObjective& g) {
  json j;
  j["regime"] = to_string(g.regime);
  j["value"] = g.value ? json(*g.value) : json(nullptr);
  j["large_n"] = g.large_n;
  j["small_n"] = g.small_n;
  return j;
}

Design design_arg(const std::string& file, const std::string& kind, const ExperimentParams& e) {
  if (!file.empty() && !kind.empty()) fail("usage", "give either --design or --kind, not both");
  if (!file.empty()) return read_design_file(file);
  if (kind.empty()) fail("usage", "a design is required: pass --design FILE or --kind NAME");
  return build_design(DesignChoice{kind, std::nullopt}, e);
}

int cmd_design(const Globals& g, const ParamFlags& f, const std::string& method) {
  const ExperimentParams e = f.get();
  json j;
  j["schema_version"] = kSchemaVersion;
  j["method"] = method;
  j["params"] = params_json(e);
  Design d;
  if (method == "algorithm") {
    const DesignSearchResult r = optimal_design(e);
    d = r.design;
    j["theta_star"] = r.theta_star;
    j["a_star"] = r.a_star;
    j["b_star"] = r.b_star;
    j["case"] = r.equal_ends ? "equal_ends" : "longer_last_gap";
    j["L"] = r.L;
    j["objective"] = r.objective;
  } else if (method == "closed-form") {
    const ClosedFormResult r = closed_form_design(e);
    d = r.design;
    j["theta_star"] = r.theta_star;
    j["source"] = r.source;
    j["fallback"] = r.fallback;
    j["objective"] = worst_case_objective_general(d, e).value ? json(*worst_case_objective_general(d, e).value) : json(nullptr);
  } else {
    d = make_standard_design(parse_standard_kind(method), e.T, e.p);
    j["objective"] = e.p < e.T ? objective_json(worst_case_objective_general(d, e)) : json(nullptr);
  }
  j["design"] = design_to_json(d);
  if (g.format == "csv") {
    std::ostringstream os;
    os << "schema_version,method,T,p,N,psi_d,psi_s,theta_star,objective,decision_points\n";
    const json& obj = j["objective"];
    const std::string ov = obj.is_number() ? format_double(obj.get<double>())
                           : obj.is_object() && obj["value"].is_number() ? format_double(obj["value"].get<double>())
                                                                         : "";
    os << kSchemaVersion << ',' << method << ',' << e.T << ',' << e.p << ',' << e.N << ',' << format_double(e.psi_d) << ','
       << format_double(e.psi_s) << ',' << (j.contains("theta_star") ? format_double(j["theta_star"].get<double>()) : "")
       << ',' << ov << ',' << csv_join(d.points) << '\n';
    emit(g, os.str());
  } else {
    emit_json(g, j);
  }
  return 0;
}

int cmd_evaluate(const Globals& g, ParamFlags f, const std::string& file, const std::string& kind, bool optimize_r) {
  if (!file.empty() && f.T == 0) f.T = read_design_file(file).T;
  const ExperimentParams e = f.get();
  const Design d = design_arg(file, kind, e);
  if (d.T != e.T) fail("horizon_mismatch", "horizon mismatch: design has T=" + std::to_string(d.T) + " but --T is " + std::to_string(e.T));
  const DecisionContext ctx(d, e.p);
  const JHistogram h = j_histogram(ctx);
  json j;
  j["schema_version"] = kSchemaVersion;
  j["params"] = params_json(e);
  j["design"] = design_to_json(d);
  j["feasible"] = validate_candidate(d, e.p);
  json hj = json::object();
  for (int k = 1; k <= e.p + 1; ++k) hj[std::to_string(k)] = h.at(k);
  j["j_histogram"] = hj;
  const GeneralObjective go = worst_case_objective_general(d, e);
  j["objective"] = objective_json(go);
  if (std::abs(e.r1 - 0.5) < 1e-12 && validate_candidate(d, e.p))
    j["objective_closed"] = worst_case_objective_closed(d, e);
  else
    j["objective_closed"] = nullptr;
  if (optimize_r) {
    const SelectionResult s = optimal_selection_probability(e, h);
    json sj;
    sj["regime"] = to_string(s.regime);
    sj["r1"] = s.r1;
    sj["r2"] = s.r2;
    sj["r1_large_n"] = s.large_n_valid ? json(s.r1_large_n) : json(nullptr);
    sj["r1_small_n"] = s.small_n_valid ? json(s.r1_small_n) : json(nullptr);
    j["selection_probability"] = sj;
  }
  if (g.format == "csv") {
    std::ostringstream os;
    os << "schema_version,T,p,N,psi_d,psi_s,regime,objective,objective_large_n,objective_small_n,objective_closed,decision_points\n";
    os << kSchemaVersion << ',' << e.T << ',' << e.p << ',' << e.N << ',' << format_double(e.psi_d) << ','
       << format_double(e.psi_s) << ',' << to_string(go.regime) << ',' << (go.value ? format_double(*go.value) : "") << ','
       << format_double(go.large_n) << ',' << format_double(go.small_n) << ','
       << (j["objective_closed"].is_number() ? format_double(j["objective_closed"].get<double>()) : "") << ','
       << csv_join(d.points) << '\n';
    emit(g, os.str());
  } else {
    emit_json(g, j);
  }
  return 0;
}

int cmd_simulate(const Globals& g, const std::string& config, std::uint64_t seed, int workers,
                 std::optional<int> reps, const std::string& qq_out) {
  if (workers < 1) fail("invalid_workers", "--workers must be >= 1");
  json cj = read_json_file(config);
  if (reps) {
    if (*reps < 1) fail("invalid_config", "--replications must be >= 1");
    cj["replications"] = *reps;
  }
  const ScenarioConfig cfg = parse_scenario(cj);
  progress(g, "simulate: " + to_string(cfg.protocol) + ", " + std::to_string(cfg.replications) + " replications, " +
                  std::to_string(workers) + " worker(s)");
  const json rep = run_scenario(cfg, RunOptions{seed, workers});
  if (!qq_out.empty()) write_text_file(qq_out, qq_to_csv(rep));
  if (g.format == "csv")
    emit(g, report_to_csv(rep));
  else
    emit_json(g, rep);
  progress(g, "simulate: done");
  return 0;
}

json estimate_json(const std::array<EffectEstimate, 4>& est) {
  json a = json::array();
  for (const auto& e : est) {
    json j;
    j["estimand"] = to_string(e.id);
    j["p"] = e.p;
    j["estimate"] = e.point;
    j["variance"] = e.variance ? json(*e.variance) : json(nullptr);
    if (e.ci) {
      j["ci_low"] = e.ci->first;
      j["ci_high"] = e.ci->second;
    } else {
      j["ci_low"] = nullptr;
      j["ci_high"] = nullptr;
    }
    a.push_back(j);
  }
  return a;
}

// Point estimates plus conservative variances and CIs where available.
std::array<EffectEstimate, 4> estimate_all(const Trajectory& tr, const Design& d, int p, double q1, double q2, double r,
                                           double alpha, std::string& note) {
  if (tr.T != d.T)
    fail("horizon_mismatch", "horizon mismatch: trajectory has T=" + std::to_string(tr.T) + " but design has T=" + std::to_string(d.T));
  const AssignmentPolicy pol{d, q1, q2, r};
  pol.validate();
  const DecisionContext ctx(d, p);
  auto est = ht_all(tr, ctx, pol);
  if (std::abs(r - 0.5) > 1e-12) {
    note = "variance estimation needs r = 0.5";
  } else if (!is_block_structured(d, p)) {
    note = "design is not block-structured for this p; no variance estimate";
  } else {
    const BlockStructure bs = block_structure(d, p);
    for (auto& e : est) {
      e.variance = conservative_variance_estimate(bs, tr, VarianceParams{q1, q2}, e.id);
      e.ci = confidence_interval(e.point, *e.variance, alpha);
    }
  }
  return est;
}

int cmd_estimate(const Globals& g, const std::string& traj, const std::string& dfile, int p, double q1, double q2,
                 double r, double alpha) {
  if (!(alpha > 0 && alpha < 1)) fail("invalid_alpha", "--alpha must lie in (0, 1)");
  const Design d = read_design_file(dfile);
  const Trajectory tr = read_trajectory_file(traj);
  std::string note;
  const auto est = estimate_all(tr, d, p, q1, q2, r, alpha, note);
  if (g.format == "csv") {
    std::ostringstream os;
    os << "schema_version,estimand,p,estimate,variance,ci_low,ci_high\n";
    for (const auto& e : est)
      os << kSchemaVersion << ',' << to_string(e.id) << ',' << p << ',' << format_double(e.point) << ','
         << (e.variance ? format_double(*e.variance) : "") << ',' << (e.ci ? format_double(e.ci->first) : "") << ','
         << (e.ci ? format_double(e.ci->second) : "") << '\n';
    emit(g, os.str());
    return 0;
  }
  json j;
  j["schema_version"] = kSchemaVersion;
  j["N"] = tr.N;
  j["T"] = tr.T;
  j["p"] = p;
  j["alpha"] = alpha;
  j["estimates"] = estimate_json(est);
  if (!note.empty()) j["note"] = note;
  emit_json(g, j);
  return 0;
}

int cmd_order_test(const Globals& g, const std::string& t1, const std::string& d1, const std::string& t2,
                   const std::string& d2, int p1, int p2, double q1, double q2, double r, double alpha) {
  if (!(alpha > 0 && alpha < 1)) fail("invalid_alpha", "--alpha must lie in (0, 1)");
  if (!(p1 >= 0 && p1 < p2)) fail("invalid_order", "order test needs 0 <= p1 < p2");
  std::string n1, n2;
  const auto e1 = estimate_all(read_trajectory_file(t1), read_design_file(d1), p1, q1, q2, r, alpha, n1);
  const auto e2 = estimate_all(read_trajectory_file(t2), read_design_file(d2), p2, q1, q2, r, alpha, n2);
  if (!n1.empty()) fail("variance_unavailable", "first experiment: " + n1);
  if (!n2.empty()) fail("variance_unavailable", "second experiment: " + n2);
  std::array<double, 4> a{}, b{}, va{}, vb{};
  for (size_t k = 0; k < 4; ++k) {
    a[k] = e1[k].point;
    b[k] = e2[k].point;
    va[k] = *e1[k].variance;
    vb[k] = *e2[k].variance;
  }
  const OrderTestResult t = order_wald_test(a, b, va, vb, alpha);
  if (g.format == "csv") {
    std::ostringstream os;
    os << "schema_version,estimand,p1,p2,estimate_p1,estimate_p2,statistic,p_value,reject\n";
    for (size_t k = 0; k < 4; ++k)
      os << kSchemaVersion << ',' << to_string(static_cast<Estimand>(k)) << ',' << p1 << ',' << p2 << ','
         << format_double(a[k]) << ',' << format_double(b[k]) << ',' << format_double(t.statistic[k]) << ','
         << format_double(t.p_value[k]) << ',' << (t.reject[k] ? "true" : "false") << '\n';
    emit(g, os.str());
    return 0;
  }
  json j;
  j["schema_version"] = kSchemaVersion;
  j["p1"] = p1;
  j["p2"] = p2;
  j["alpha"] = alpha;
  j["critical_value"] = t.critical;
  for (size_t k = 0; k < 4; ++k) {
    json s;
    s["estimand"] = to_string(static_cast<Estimand>(k));
    s["estimate_p1"] = a[k];
    s["estimate_p2"] = b[k];
    s["variance_p1"] = va[k];
    s["variance_p2"] = vb[k];
    s["statistic"] = t.statistic[k];
    s["p_value"] = t.p_value[k];
    s["reject"] = t.reject[k];
    j["statistics"].push_back(s);
  }
  j["reject"] = t.overall_reject;
  j["decision"] = t.overall_reject ? "reject: carryover order exceeds p1" : "no evidence against order p1";
  emit_json(g, j);
  return 0;
}

struct TrialFlags {
  std::string design, kind, model = "model1";
  int m = 2;
  double delta = 1.0, noise_sd = 1.0;
};

int cmd_trial(const Globals& g, ParamFlags f, const TrialFlags& tf, std::uint64_t seed) {
  if (!tf.design.empty() && f.T == 0) f.T = read_design_file(tf.design).T;
  const ExperimentParams e = f.get();
  const Design d = design_arg(tf.design, tf.kind, e);
  json mj;
  mj["kind"] = tf.model;
  mj["B"] = e.B;
  mj["m"] = tf.m;
  mj["delta"] = tf.delta;
  mj["noise_sd"] = tf.noise_sd;
  json cj;
  cj["schema_version"] = kSchemaVersion;
  cj["protocol"] = "risk_table";
  cj["params"] = params_json(e);
  cj["model"] = mj;
  const ScenarioConfig cfg = parse_scenario(cj);
  const auto model = cfg.model.build(e.N, d.T, e.q1, derive_seed(seed, 2));
  const Trajectory tr = run_trial(AssignmentPolicy{d, e.q1, e.q2, e.r1}, *model, e.N, seed);
  if (g.format == "csv") {
    std::ostringstream os;
    write_trajectory_csv(os, tr);
    emit(g, os.str());
    return 0;
  }
  json j;
  j["schema_version"] = kSchemaVersion;
  j["seed"] = seed;
  j["design"] = design_to_json(d);
  j["N"] = tr.N;
  j["T"] = tr.T;
  j["Q"] = tr.Q;
  json z = json::array(), y = json::array();
  for (int i = 0; i < tr.N; ++i) {
    json zr = json::array(), yr = json::array();
    for (int t = 1; t <= tr.T; ++t) {
      zr.push_back(tr.z(i, t));
      yr.push_back(tr.y(i, t));
    }
    z.push_back(zr);
    y.push_back(yr);
  }
  j["Z"] = z;
  j["Y"] = y;
  emit_json(g, j);
  return 0;
}

int cmd_verify(const Globals& g, const std::string& suite, std::uint64_t seed) {
  if (suite != "oracle") fail("invalid_suite", "unknown suite '" + suite + "' (expected oracle)");
  const auto res = run_oracle_suite(seed, [&](const CheckResult& r) {
    progress(g, std::string(r.passed ? "PASS " : "FAIL ") + r.name + " (" + std::to_string(r.cases) +
                    " cases, max error " + format_double(r.max_error) + ")");
  });
  bool ok = true;
  for (const auto& r : res) ok = ok && r.passed;
  if (g.format == "csv") {
    std::ostringstream os;
    os << "schema_version,check,passed,cases,max_error\n";
    for (const auto& r : res)
      os << kSchemaVersion << ',' << r.name << ',' << (r.passed ? "true" : "false") << ',' << r.cases << ','
         << format_double(r.max_error) << '\n';
    emit(g, os.str());
  } else {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["suite"] = suite;
    j["seed"] = seed;
    j["passed"] = ok;
    for (const auto& r : res) {
      json c;
      c["name"] = r.name;
      c["passed"] = r.passed;
      c["cases"] = r.cases;
      c["max_error"] = r.max_error;
      if (!r.detail.empty()) c["detail"] = r.detail;
      j["checks"].push_back(c);
    }
    emit_json(g, j);
  }
  return ok ? 0 : 3;
}

bool wants_json(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--format=csv") return false;
    if (a == "--format" && i + 1 < argc && std::string(argv[i + 1]) == "csv") return false;
  }
  return true;
}

int report_error(bool as_json, const std::string& code, const std::string& msg, int rc) {
  if (as_json) {
    json j;
    j["code"] = code;
    j["message"] = msg;
    j["exit_code"] = rc;
    std::cerr << j.dump() << '\n';
  } else {
    std::cerr << "error [" << code << "]: " << msg << '\n';
  }
  return rc;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmd: minimax optimal designs, Monte Carlo simulation and design-based inference for time-series experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--format", g.format, "Output format for reports and errors")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  app.add_flag("--quiet", g.quiet, "Suppress progress messages on stderr");
  app.add_option("--out", g.out, "Write the primary output to this file instead of stdout");

  ParamFlags pf;
  auto* design = app.add_subcommand("design", "Compute a design and its worst-case objective");
  add_param_flags(design, pf, true);
  std::string method = "algorithm";
  design->add_option("--method", method, "algorithm, closed-form, independent, blocked, star1 or star2")
      ->check(CLI::IsMember({"algorithm", "closed-form", "independent", "blocked", "star1", "star2"}))
      ->capture_default_str();

  ParamFlags ef;
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate the worst-case objective of a given design");
  add_param_flags(evaluate, ef, false);
  std::string eval_design, eval_kind;
  bool optimize_r = false;
  evaluate->add_option("--design", eval_design, "Design JSON file")->check(CLI::ExistingFile);
  evaluate->add_option("--kind", eval_kind, "Named design instead of a file (independent, blocked, star1, star2, optimal, closed_form)");
  evaluate->add_flag("--optimize-r", optimize_r, "Also report the optimal selection probability r");

  auto* simulate = app.add_subcommand("simulate", "Run a Monte Carlo scenario from a JSON config");
  std::string config, qq_out;
  std::uint64_t sim_seed = 0;
  int workers = 1;
  std::optional<int> reps;
  simulate->add_option("--config", config, "Scenario JSON file")->required()->check(CLI::ExistingFile);
  simulate->add_option("--seed", sim_seed, "Master seed (required)")->required();
  simulate->add_option("--workers", workers, "Worker threads; output does not depend on this")->capture_default_str();
  simulate->add_option("--replications", reps, "Override the replication count in the config");
  simulate->add_option("--qq-out", qq_out, "Also write (theoretical, sample) quantile pairs as CSV");

  auto* estimate = app.add_subcommand("estimate", "HT estimates, conservative variances and CIs from a trajectory");
  std::string est_traj, est_design;
  int est_p = 1;
  double eq1 = 0.6, eq2 = 0.4, er = 0.5, ealpha = 0.05;
  estimate->add_option("--trajectory", est_traj, "Trajectory CSV (unit,time,q,z,y)")->required()->check(CLI::ExistingFile);
  estimate->add_option("--design", est_design, "Design JSON file")->required()->check(CLI::ExistingFile);
  estimate->add_option("--p", est_p, "Carryover order used for estimation")->capture_default_str();
  estimate->add_option("--q1", eq1, "First treated probability")->capture_default_str();
  estimate->add_option("--q2", eq2, "Second treated probability")->capture_default_str();
  estimate->add_option("--r", er, "Chance of selecting q1 at each decision point")->capture_default_str();
  estimate->add_option("--alpha", ealpha, "CI level is 1 - alpha")->capture_default_str();

  auto* order = app.add_subcommand("order-test", "Wald test of carryover order p1 against p2");
  std::string t1, d1, t2, d2;
  int p1 = 1, p2 = 2;
  double oq1 = 0.6, oq2 = 0.4, orr = 0.5, oalpha = 0.05;
  order->add_option("--trajectory1", t1, "Trajectory CSV of the order-p1 experiment")->required()->check(CLI::ExistingFile);
  order->add_option("--design1", d1, "Design JSON of the order-p1 experiment")->required()->check(CLI::ExistingFile);
  order->add_option("--trajectory2", t2, "Trajectory CSV of the order-p2 experiment")->required()->check(CLI::ExistingFile);
  order->add_option("--design2", d2, "Design JSON of the order-p2 experiment")->required()->check(CLI::ExistingFile);
  order->add_option("--p1", p1, "Null carryover order")->capture_default_str();
  order->add_option("--p2", p2, "Larger carryover order")->capture_default_str();
  order->add_option("--q1", oq1, "First treated probability")->capture_default_str();
  order->add_option("--q2", oq2, "Second treated probability")->capture_default_str();
  order->add_option("--r", orr, "Chance of selecting q1 at each decision point")->capture_default_str();
  order->add_option("--alpha", oalpha, "Test level")->capture_default_str();

  ParamFlags tpf;
  TrialFlags tf;
  std::uint64_t trial_seed = 0;
  auto* trial = app.add_subcommand("trial", "Draw one assignment and outcomes; CSV output feeds estimate");
  add_param_flags(trial, tpf, false);
  trial->add_option("--design", tf.design, "Design JSON file")->check(CLI::ExistingFile);
  trial->add_option("--kind", tf.kind, "Named design instead of a file");
  trial->add_option("--model", tf.model, "Outcome model")->check(CLI::IsMember({"model1", "model2"}))->capture_default_str();
  trial->add_option("--m", tf.m, "Carryover order of model2")->capture_default_str();
  trial->add_option("--delta", tf.delta, "Effect size of every model2 coefficient")->capture_default_str();
  trial->add_option("--noise-sd", tf.noise_sd, "Noise standard deviation of model2")->capture_default_str();
  trial->add_option("--seed", trial_seed, "Seed (required)")->required();

  auto* verify = app.add_subcommand("verify", "Run the enumeration cross-check battery; exit 3 on failure");
  std::string suite = "oracle";
  std::uint64_t verify_seed = kVerifySeed;
  verify->add_option("--suite", suite, "Check suite")->check(CLI::IsMember({"oracle"}))->capture_default_str();
  verify->add_option("--seed", verify_seed, "Seed for the random tables")->capture_default_str();

  for (auto* sc : app.get_subcommands({}))
    sc->footer("Global flags (before or after the subcommand): --format json|csv, --quiet, --out FILE");

  const bool as_json = wants_json(argc, argv);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(as_json, "usage", e.what(), 1);
  }

  try {
    if (*design) return cmd_design(g, pf, method);
    if (*evaluate) return cmd_evaluate(g, ef, eval_design, eval_kind, optimize_r);
    if (*simulate) return cmd_simulate(g, config, sim_seed, workers, reps, qq_out);
    if (*estimate) return cmd_estimate(g, est_traj, est_design, est_p, eq1, eq2, er, ealpha);
    if (*order) return cmd_order_test(g, t1, d1, t2, d2, p1, p2, oq1, oq2, orr, oalpha);
    if (*trial) return cmd_trial(g, tpf, tf, trial_seed);
    if (*verify) return cmd_verify(g, suite, verify_seed);
  } catch (const Error& e) {
    return report_error(as_json, e.code(), e.what(), e.kind() == ErrorKind::infeasible ? 2 : 1);
  } catch (const json::exception& e) {
    return report_error(as_json, "invalid_json", e.what(), 1);
  } catch (const std::exception& e) {
    return report_error(as_json, "internal", e.what(), 1);
  }
  return 1;
}
