#include "mmd/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mmd/error.hpp"
#include "mmd/estimation.hpp"
#include "mmd/parallel.hpp"
#include "mmd/variance.hpp"

namespace mmd {

namespace {

constexpr std::uint64_t kAssignTag = 1;
constexpr std::uint64_t kNoiseTag = 2;

}  // namespace

Protocol parse_protocol(const std::string& s) {
  if (s == "risk_table") return Protocol::risk_table;
  if (s == "inference_table") return Protocol::inference_table;
  if (s == "order_figure") return Protocol::order_figure;
  if (s == "normality_qq") return Protocol::normality_qq;
  fail("invalid_config", "field 'protocol' must be risk_table, inference_table, order_figure or normality_qq");
}

std::string to_string(Protocol p) {
  switch (p) {
    case Protocol::risk_table: return "risk_table";
    case Protocol::inference_table: return "inference_table";
    case Protocol::order_figure: return "order_figure";
    case Protocol::normality_qq: return "normality_qq";
  }
  return "?";
}

std::shared_ptr<const OutcomeModel> ModelConfig::build(int N, int T, double q1, std::uint64_t noise_seed) const {
  if (kind == "model1") return std::make_shared<Model1>(B);
  if (kind == "model2") return std::make_shared<Model2>(spec, N, T, q1, noise_seed);
  fail("invalid_config", "field 'model.kind' must be model1 or model2");
}

Design build_design(const DesignChoice& choice, const ExperimentParams& params) {
  if (choice.custom) {
    if (choice.custom->T != params.T) fail("horizon_mismatch", "design '" + choice.name + "' has a different T");
    return *choice.custom;
  }
  if (choice.name == "optimal") return optimal_design(params).design;
  if (choice.name == "closed_form") return closed_form_design(params).design;
  return make_standard_design(parse_standard_kind(choice.name), params.T, params.p);
}

namespace {

template <class T>
T get_or(const json& j, const char* key, T def) {
  if (!j.contains(key)) return def;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail("invalid_config", std::string("field '") + key + "' has the wrong type");
  }
}

std::vector<double> get_vec(const json& j, const char* key, size_t n, double def) {
  if (!j.contains(key)) return std::vector<double>(n, def);
  std::vector<double> v;
  try {
    v = j.at(key).get<std::vector<double>>();
  } catch (const json::exception&) {
    fail("invalid_config", std::string("field 'model.") + key + "' must be a list of numbers");
  }
  if (v.size() != n) fail("invalid_config", std::string("field 'model.") + key + "' must have m+1 entries");
  return v;
}

ModelConfig parse_model(const json& j) {
  ModelConfig m;
  if (!j.is_object()) fail("invalid_config", "field 'model' must be an object");
  m.kind = get_or<std::string>(j, "kind", "model1");
  m.B = get_or<double>(j, "B", 1.0);
  if (m.kind == "model2") {
    const int order = get_or<int>(j, "m", 2);
    if (order < 0) fail("invalid_config", "field 'model.m' must be >= 0");
    const double delta = get_or<double>(j, "delta", 1.0);
    const auto n = static_cast<size_t>(order) + 1;
    m.spec = Model2Spec::with_order(order, delta);
    m.spec.delta_q = get_vec(j, "delta_q", n, delta);
    m.spec.delta_z = get_vec(j, "delta_z", n, delta);
    m.spec.delta_qz = get_vec(j, "delta_qz", n, delta);
    m.spec.noise_sd = get_or<double>(j, "noise_sd", 1.0);
    m.spec.validate();
  } else if (m.kind != "model1") {
    fail("invalid_config", "field 'model.kind' must be model1 or model2");
  }
  if (!(m.B > 0)) fail("invalid_config", "field 'model.B' must be positive");
  return m;
}

}  // namespace

ScenarioConfig parse_scenario(const json& j) {
  if (!j.is_object()) fail("invalid_config", "scenario must be a JSON object");
  ScenarioConfig c;
  c.source = j;
  const int sv = get_or<int>(j, "schema_version", -1);
  if (sv != kSchemaVersion)
    fail("invalid_config", "field 'schema_version' must be " + std::to_string(kSchemaVersion));
  if (!j.contains("protocol")) fail("invalid_config", "field 'protocol' is required");
  c.protocol = parse_protocol(get_or<std::string>(j, "protocol", ""));
  const json pj = j.value("params", json::object());
  c.params.N = get_or<int>(pj, "N", 20);
  c.params.T = get_or<int>(pj, "T", 100);
  c.params.p = get_or<int>(pj, "p", 1);
  c.params.q1 = get_or<double>(pj, "q1", 0.6);
  c.params.q2 = get_or<double>(pj, "q2", 0.4);
  c.params.r1 = get_or<double>(pj, "r", 0.5);
  c.params.psi_d = get_or<double>(pj, "psi_d", 0.5);
  c.params.psi_s = get_or<double>(pj, "psi_s", 1 - c.params.psi_d);
  c.params.B = get_or<double>(pj, "B", 1.0);
  if (c.protocol != Protocol::order_figure) c.params.validate();
  if (j.contains("designs")) {
    if (!j["designs"].is_array()) fail("invalid_config", "field 'designs' must be a list");
    for (const auto& d : j["designs"]) {
      DesignChoice dc;
      if (d.is_string()) {
        dc.name = d.get<std::string>();
      } else if (d.is_object()) {
        dc.name = get_or<std::string>(d, "name", "custom");
        if (d.contains("decision_points")) {
          json dj = d;
          if (!dj.contains("T")) dj["T"] = c.params.T;
          dc.custom = design_from_json(dj);
        }
      } else {
        fail("invalid_config", "entries of 'designs' must be names or objects");
      }
      c.designs.push_back(std::move(dc));
    }
  }
  if (c.designs.empty()) {
    if (c.protocol == Protocol::risk_table)
      for (const char* n : {"star1", "star2", "independent", "blocked"}) c.designs.push_back({n, std::nullopt});
    else
      c.designs.push_back({"star1", std::nullopt});
  }
  if (j.contains("objectives")) {
    for (const auto& o : j["objectives"]) {
      if (!o.is_array() || o.size() != 2) fail("invalid_config", "entries of 'objectives' must be [psi_d, psi_s]");
      c.objectives.emplace_back(o[0].get<double>(), o[1].get<double>());
    }
  } else {
    c.objectives = {{1.0, 0.0}, {0.0, 1.0}, {0.5, 0.5}};
  }
  for (auto [d, s] : c.objectives)
    if (d < 0 || s < 0 || std::abs(d + s - 1) > 1e-9) fail("invalid_config", "objective weights must be non-negative and sum to 1");
  c.model = parse_model(j.value("model", json::object()));
  c.replications = get_or<int>(j, "replications", 500);
  if (c.replications < 1) fail("invalid_config", "field 'replications' must be >= 1");
  c.p_est = get_or<int>(j, "p_est", c.params.p);
  if (c.p_est < 0) fail("invalid_config", "field 'p_est' must be >= 0");
  c.alpha = get_or<double>(j, "alpha", 0.05);
  if (!(c.alpha > 0 && c.alpha < 1)) fail("invalid_config", "field 'alpha' must lie in (0, 1)");
  if (j.contains("centers")) {
    const json& cj = j["centers"];
    if (cj.is_object()) {
      const int G = get_or<int>(cj, "count", 1);
      const int u = get_or<int>(cj, "units", 1);
      if (G < 1 || u < 1) fail("invalid_config", "field 'centers' needs count >= 1 and units >= 1");
      c.centers.assign(static_cast<size_t>(G), u);
    } else if (cj.is_array()) {
      for (const auto& e : cj) {
        const int u = e.is_object() ? get_or<int>(e, "N", 0) : e.get<int>();
        if (u < 1) fail("invalid_config", "every center needs N >= 1");
        c.centers.push_back(u);
      }
    } else {
      fail("invalid_config", "field 'centers' must be an object or a list");
    }
  }
  if (c.protocol == Protocol::order_figure) {
    if (!j.contains("order") || !j["order"].is_object()) fail("invalid_config", "order_figure needs an 'order' object");
    const json& oj = j["order"];
    c.p1 = get_or<int>(oj, "p1", 1);
    c.p2 = get_or<int>(oj, "p2", 2);
    if (c.p1 < 0 || c.p2 <= c.p1) fail("invalid_config", "order test needs 0 <= p1 < p2");
    if (!oj.contains("points") || !oj["points"].is_array() || oj["points"].empty())
      fail("invalid_config", "field 'order.points' must be a non-empty list");
    for (const auto& pt : oj["points"]) {
      OrderPoint op;
      op.centers = get_or<int>(pt, "centers", 1);
      op.units = get_or<int>(pt, "units", c.params.N);
      op.T = get_or<int>(pt, "T", c.params.T);
      op.label = get_or<std::string>(pt, "label", std::to_string(op.centers) + "x" + std::to_string(op.units) + "_T" + std::to_string(op.T));
      if (op.centers < 1 || op.units < 1 || op.T < 1) fail("invalid_config", "order points need centers, units and T >= 1");
      c.order_points.push_back(op);
    }
  }
  return c;
}

namespace {

struct Population {
  Design design;
  AssignmentPolicy policy;
  int p_est = 0;
  std::vector<int> sizes;
  std::vector<double> weights;
  std::vector<std::shared_ptr<const OutcomeModel>> models;
  std::vector<CellTable> cells;
  std::array<double, 4> truth{};
  std::optional<BlockStructure> blocks;
};

Population make_population(const ScenarioConfig& cfg, const Design& design, int p_est, const std::vector<int>& sizes,
                           std::uint64_t seed, std::uint64_t pop) {
  Population P;
  P.design = design;
  P.policy = AssignmentPolicy{design, cfg.params.q1, cfg.params.q2, cfg.params.r1};
  P.p_est = p_est;
  P.sizes = sizes;
  if (p_est >= design.T) fail("invalid_order", "estimation order must be below T");
  double total = 0;
  for (int n : sizes) total += n;
  for (size_t g = 0; g < sizes.size(); ++g) {
    P.weights.push_back(sizes[g] / total);
    P.models.push_back(cfg.model.build(sizes[g], design.T, cfg.params.q1, derive_seed(seed, kNoiseTag, pop * 1000003 + g)));
    P.cells.push_back(potential_cells(*P.models.back(), sizes[g], design.T, cfg.params.q1, cfg.params.q2));
    const auto tau = cell_estimands(P.cells.back(), p_est);
    for (size_t e = 0; e < 4; ++e) P.truth[e] += P.weights[g] * tau[e];
  }
  if (is_block_structured(design, p_est)) P.blocks = block_structure(design, p_est);
  return P;
}

struct RepOut {
  std::array<double, 4> est{};
  std::array<double, 4> var{};
};

RepOut run_population(const Population& P, std::uint64_t rep_seed, bool with_var, const VarianceParams& vp) {
  const DecisionContext ctx(P.design, P.p_est);
  RepOut out;
  for (size_t g = 0; g < P.sizes.size(); ++g) {
    const std::uint64_t s = g == 0 ? rep_seed : derive_seed(rep_seed, g);
    const Trajectory tr = run_trial(P.policy, *P.models[g], P.sizes[g], s);
    const auto est = ht_all(tr, ctx, P.policy);
    for (size_t e = 0; e < 4; ++e) out.est[e] += P.weights[g] * est[e].point;
    if (with_var) {
      const ObservedBlocks ob = block_decompose(*P.blocks, tr, vp.q1, vp.q2);
      for (size_t e = 0; e < 4; ++e)
        out.var[e] += P.weights[g] * P.weights[g] * estimator_terms(*P.blocks, ob, vp, static_cast<Estimand>(e)).total();
    }
  }
  return out;
}

std::vector<int> center_sizes(const ScenarioConfig& cfg) {
  return cfg.centers.empty() ? std::vector<int>{cfg.params.N} : cfg.centers;
}

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double var_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

double se_of(const std::vector<double>& v) { return std::sqrt(var_of(v) / static_cast<double>(v.size())); }

json base_report(const ScenarioConfig& cfg, const RunOptions& opt) {
  json r;
  r["schema_version"] = kSchemaVersion;
  r["protocol"] = to_string(cfg.protocol);
  r["seed"] = opt.seed;
  r["replications"] = cfg.replications;
  r["config"] = cfg.source;
  return r;
}

// analytic quantities valid when the estimation order covers the model order
std::optional<std::array<double, 4>> analytic_variance(const ScenarioConfig& cfg, const Population& P) {
  if (P.p_est < cfg.model.order()) return std::nullopt;
  const DecisionContext ctx(P.design, P.p_est);
  std::array<double, 4> v{};
  for (size_t g = 0; g < P.sizes.size(); ++g) {
    ExperimentParams ep = cfg.params;
    ep.N = P.sizes[g];
    ep.T = P.design.T;
    ep.p = P.p_est;
    const auto r = exact_risk(ctx, ep, P.cells[g]);
    for (size_t e = 0; e < 4; ++e) v[e] += P.weights[g] * P.weights[g] * r[e];
  }
  return v;
}

}  // namespace

json mc_risk(const ScenarioConfig& cfg, const RunOptions& opt) {
  json rep = base_report(cfg, opt);
  const auto sizes = center_sizes(cfg);
  const VarianceParams vp{cfg.params.q1, cfg.params.q2};
  struct Row {
    std::string name;
    std::optional<Design> design;
    std::string reason;
    std::vector<std::vector<double>> loss;  // per objective, per rep
  };
  std::vector<Row> rows;
  for (size_t di = 0; di < cfg.designs.size(); ++di) {
    Row row;
    row.name = cfg.designs[di].name;
    try {
      row.design = build_design(cfg.designs[di], cfg.params);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::infeasible) throw;
      row.reason = e.what();
      rows.push_back(std::move(row));
      continue;
    }
    const Population P = make_population(cfg, *row.design, cfg.p_est, sizes, opt.seed, 0);
    std::vector<std::array<double, 4>> sq(static_cast<size_t>(cfg.replications));
    parallel_for(sq.size(), opt.workers, [&](size_t r) {
      const RepOut o = run_population(P, derive_seed(opt.seed, kAssignTag, r), false, vp);
      for (size_t e = 0; e < 4; ++e) sq[r][e] = std::pow(o.est[e] - P.truth[e], 2);
    });
    const auto analytic = analytic_variance(cfg, P);
    json dj;
    dj["name"] = row.name;
    dj["available"] = true;
    dj["decision_points"] = row.design->points;
    json objs = json::array();
    for (auto [pd, ps] : cfg.objectives) {
      std::vector<double> l;
      l.reserve(sq.size());
      for (const auto& s : sq) l.push_back(combine_risks(s, pd, ps));
      json o;
      o["psi_d"] = pd;
      o["psi_s"] = ps;
      o["mc_risk"] = mean_of(l);
      o["mc_se"] = se_of(l);
      if (analytic) o["analytic"] = combine_risks(*analytic, pd, ps);
      else o["analytic"] = nullptr;
      objs.push_back(o);
      row.loss.push_back(std::move(l));
    }
    dj["objectives"] = objs;
    rep["designs"].push_back(dj);
    rows.push_back(std::move(row));
  }
  for (const Row& row : rows)
    if (!row.design) {
      json dj;
      dj["name"] = row.name;
      dj["available"] = false;
      dj["reason"] = row.reason;
      rep["designs"].push_back(dj);
    }
  json sel = json::array();
  for (size_t k = 0; k < cfg.objectives.size(); ++k) {
    ExperimentParams ep = cfg.params;
    ep.psi_d = cfg.objectives[k].first;
    ep.psi_s = cfg.objectives[k].second;
    json sj;
    sj["psi_d"] = ep.psi_d;
    sj["psi_s"] = ep.psi_s;
    const ClosedFormResult cf = closed_form_design(ep);
    sj["theta_star"] = cf.theta_star;
    sj["selected_source"] = cf.source;
    sj["selected_points"] = cf.design.points;
    const Row* best = nullptr;
    const Row* chosen = nullptr;
    for (const Row& row : rows) {
      if (!row.design) continue;
      if (!best || mean_of(row.loss[k]) < mean_of(best->loss[k])) best = &row;
      if (!chosen && row.design->points == cf.design.points) chosen = &row;
    }
    sj["mc_best"] = best ? json(best->name) : json(nullptr);
    sj["selected_design"] = chosen ? json(chosen->name) : json(nullptr);
    if (best && chosen) {
      const double gap = mean_of(chosen->loss[k]) - mean_of(best->loss[k]);
      const double band = 3 * std::sqrt(std::pow(se_of(chosen->loss[k]), 2) + std::pow(se_of(best->loss[k]), 2));
      sj["selected_within_3se"] = gap <= band;
    } else {
      sj["selected_within_3se"] = nullptr;
    }
    sel.push_back(sj);
  }
  rep["selection"] = sel;
  return rep;
}

static void require_half(const ScenarioConfig& cfg) {
  if (std::abs(cfg.params.r1 - 0.5) > 1e-12)
    fail("variance_requires_half", "variance estimation needs r = 0.5, got r = " + format_double(cfg.params.r1));
}

json mc_inference(const ScenarioConfig& cfg, const RunOptions& opt) {
  require_half(cfg);
  json rep = base_report(cfg, opt);
  const Design design = build_design(cfg.designs.front(), cfg.params);
  const Population P = make_population(cfg, design, cfg.p_est, center_sizes(cfg), opt.seed, 0);
  if (!P.blocks)
    fail("not_block_structured", "inference needs a block-structured design for order p_est = " + std::to_string(cfg.p_est));
  const VarianceParams vp{cfg.params.q1, cfg.params.q2};
  std::vector<RepOut> outs(static_cast<size_t>(cfg.replications));
  parallel_for(outs.size(), opt.workers,
               [&](size_t r) { outs[r] = run_population(P, derive_seed(opt.seed, kAssignTag, r), true, vp); });
  const auto analytic = analytic_variance(cfg, P);
  std::array<double, 4> bound{};
  for (size_t g = 0; g < P.sizes.size(); ++g)
    for (size_t e = 0; e < 4; ++e)
      bound[e] += P.weights[g] * P.weights[g] * variance_upper_bound(*P.blocks, P.cells[g], vp, static_cast<Estimand>(e));
  rep["design"] = design_to_json(design);
  rep["design_name"] = cfg.designs.front().name;
  rep["p_est"] = cfg.p_est;
  rep["model_order"] = cfg.model.order();
  rep["misspecified"] = cfg.p_est < cfg.model.order();
  rep["centers"] = P.sizes.size();
  const double z = normal_quantile(1 - cfg.alpha / 2);
  for (size_t e = 0; e < 4; ++e) {
    std::vector<double> est, ve, cover, width;
    for (const RepOut& o : outs) {
      est.push_back(o.est[e]);
      ve.push_back(o.var[e]);
      const double half = z * std::sqrt(std::max(0.0, o.var[e]));
      cover.push_back(std::abs(o.est[e] - P.truth[e]) <= half ? 1.0 : 0.0);
      width.push_back(2 * half);
    }
    json ej;
    ej["estimand"] = to_string(static_cast<Estimand>(e));
    ej["value"] = P.truth[e];
    ej["mean_estimate"] = mean_of(est);
    ej["bias"] = mean_of(est) - P.truth[e];
    ej["bias_se"] = se_of(est);
    ej["variance"] = var_of(est);
    ej["exact_variance"] = analytic ? json((*analytic)[e]) : json(nullptr);
    ej["variance_bound"] = bound[e];
    ej["var_est_mean"] = mean_of(ve);
    ej["var_est_se"] = se_of(ve);
    const double cp = mean_of(cover);
    ej["cp"] = cp;
    ej["cp_se"] = std::sqrt(cp * (1 - cp) / static_cast<double>(cover.size()));
    ej["mean_ci_width"] = mean_of(width);
    rep["estimands"].push_back(ej);
  }
  return rep;
}

NormalitySummary normality_diagnostics(const std::vector<double>& x) {
  if (x.size() < 3) fail("too_few_samples", "normality diagnostics need at least 3 samples");
  NormalitySummary s;
  const double n = static_cast<double>(x.size());
  s.mean = mean_of(x);
  s.sd = std::sqrt(var_of(x));
  if (!(s.sd > 0)) fail("degenerate_samples", "samples have zero spread");
  std::vector<double> z;
  z.reserve(x.size());
  for (double v : x) z.push_back((v - s.mean) / s.sd);
  double m2 = 0, m3 = 0, m4 = 0;
  for (double v : z) {
    m2 += v * v;
    m3 += v * v * v;
    m4 += v * v * v * v;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  s.skewness = m3 / std::pow(m2, 1.5);
  s.excess_kurtosis = m4 / (m2 * m2) - 3;
  std::sort(z.begin(), z.end());
  for (size_t i = 0; i < z.size(); ++i) {
    const double F = normal_cdf(z[i]);
    s.ks = std::max({s.ks, (static_cast<double>(i) + 1) / n - F, F - static_cast<double>(i) / n});
    s.qq.emplace_back(normal_quantile((static_cast<double>(i) + 0.5) / n), z[i]);
  }
  return s;
}

json mc_normality(const ScenarioConfig& cfg, const RunOptions& opt) {
  json rep = base_report(cfg, opt);
  const Design design = build_design(cfg.designs.front(), cfg.params);
  const Population P = make_population(cfg, design, cfg.p_est, center_sizes(cfg), opt.seed, 0);
  const VarianceParams vp{cfg.params.q1, cfg.params.q2};
  std::vector<RepOut> outs(static_cast<size_t>(cfg.replications));
  parallel_for(outs.size(), opt.workers,
               [&](size_t r) { outs[r] = run_population(P, derive_seed(opt.seed, kAssignTag, r), false, vp); });
  rep["design"] = design_to_json(design);
  rep["design_name"] = cfg.designs.front().name;
  rep["p_est"] = cfg.p_est;
  rep["model_order"] = cfg.model.order();
  rep["misspecified"] = cfg.p_est < cfg.model.order();
  for (size_t e = 0; e < 4; ++e) {
    std::vector<double> est;
    for (const RepOut& o : outs) est.push_back(o.est[e]);
    const NormalitySummary ns = normality_diagnostics(est);
    json ej;
    ej["estimand"] = to_string(static_cast<Estimand>(e));
    ej["mean"] = ns.mean;
    ej["sd"] = ns.sd;
    ej["ks"] = ns.ks;
    ej["skewness"] = ns.skewness;
    ej["excess_kurtosis"] = ns.excess_kurtosis;
    json qq = json::array();
    for (auto [a, b] : ns.qq) qq.push_back(json::array({a, b}));
    ej["qq"] = qq;
    rep["estimands"].push_back(ej);
  }
  return rep;
}

json mc_order(const ScenarioConfig& cfg, const RunOptions& opt) {
  require_half(cfg);
  json rep = base_report(cfg, opt);
  const VarianceParams vp{cfg.params.q1, cfg.params.q2};
  for (size_t k = 0; k < cfg.order_points.size(); ++k) {
    const OrderPoint& op = cfg.order_points[k];
    ExperimentParams e1 = cfg.params, e2 = cfg.params;
    e1.T = e2.T = op.T;
    e1.N = e2.N = op.units;
    e1.p = cfg.p1;
    e2.p = cfg.p2;
    e1.validate();
    e2.validate();
    const Design d1 = build_design(cfg.designs.front(), e1);
    const Design d2 = build_design(cfg.designs.front(), e2);
    const std::vector<int> sizes(static_cast<size_t>(op.centers), op.units);
    const std::uint64_t pseed = derive_seed(opt.seed, 3, k);
    const Population A = make_population(cfg, d1, cfg.p1, sizes, pseed, 1);
    const Population B = make_population(cfg, d2, cfg.p2, sizes, pseed, 2);
    if (!A.blocks || !B.blocks) fail("not_block_structured", "order test needs block-structured designs for p1 and p2");
    std::vector<OrderTestResult> res(static_cast<size_t>(cfg.replications));
    parallel_for(res.size(), opt.workers, [&](size_t r) {
      const RepOut a = run_population(A, derive_seed(pseed, kAssignTag, 2 * r), true, vp);
      const RepOut b = run_population(B, derive_seed(pseed, kAssignTag, 2 * r + 1), true, vp);
      res[r] = order_wald_test(a.est, b.est, a.var, b.var, cfg.alpha);
    });
    json pj;
    pj["label"] = op.label;
    pj["centers"] = op.centers;
    pj["units"] = op.units;
    pj["T"] = op.T;
    pj["p1"] = cfg.p1;
    pj["p2"] = cfg.p2;
    pj["design_p1"] = d1.points;
    pj["design_p2"] = d2.points;
    std::vector<double> overall;
    for (const auto& r : res) overall.push_back(r.overall_reject ? 1.0 : 0.0);
    for (size_t e = 0; e < 4; ++e) {
      std::vector<double> pv, rj;
      for (const auto& r : res) {
        pv.push_back(r.p_value[e]);
        rj.push_back(r.reject[e] ? 1.0 : 0.0);
      }
      json sj;
      sj["estimand"] = to_string(static_cast<Estimand>(e));
      sj["mean_p_value"] = mean_of(pv);
      sj["p_value_se"] = se_of(pv);
      sj["rejection_rate"] = mean_of(rj);
      pj["statistics"].push_back(sj);
    }
    const double orr = mean_of(overall);
    pj["overall_rejection_rate"] = orr;
    pj["overall_rejection_se"] = std::sqrt(orr * (1 - orr) / static_cast<double>(overall.size()));
    rep["points"].push_back(pj);
  }
  return rep;
}

json run_scenario(const ScenarioConfig& cfg, const RunOptions& opt) {
  switch (cfg.protocol) {
    case Protocol::risk_table: return mc_risk(cfg, opt);
    case Protocol::inference_table: return mc_inference(cfg, opt);
    case Protocol::order_figure: return mc_order(cfg, opt);
    case Protocol::normality_qq: return mc_normality(cfg, opt);
  }
  fail("invalid_config", "unknown protocol");
}

namespace {

std::string cell(const json& v) {
  if (v.is_null()) return "";
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_array()) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : " ") + cell(x);
    return s;
  }
  return v.dump();
}

void line(std::ostringstream& os, std::initializer_list<std::string> fields) {
  bool first = true;
  for (const auto& f : fields) {
    os << (first ? "" : ",") << f;
    first = false;
  }
  os << '\n';
}

}  // namespace

std::string report_to_csv(const json& r) {
  std::ostringstream os;
  const std::string sv = std::to_string(kSchemaVersion);
  const std::string proto = r.at("protocol").get<std::string>();
  if (proto == "risk_table") {
    line(os, {"schema_version", "protocol", "design", "decision_points", "psi_d", "psi_s", "mc_risk", "mc_se", "analytic"});
    for (const auto& d : r.at("designs")) {
      if (!d.at("available").get<bool>()) {
        line(os, {sv, proto, cell(d["name"]), "", "", "", "", "", ""});
        continue;
      }
      for (const auto& o : d.at("objectives"))
        line(os, {sv, proto, cell(d["name"]), cell(d["decision_points"]), cell(o["psi_d"]), cell(o["psi_s"]),
                  cell(o["mc_risk"]), cell(o["mc_se"]), cell(o["analytic"])});
    }
  } else if (proto == "inference_table") {
    line(os, {"schema_version", "protocol", "estimand", "value", "bias", "bias_se", "variance", "exact_variance",
              "variance_bound", "var_est_mean", "var_est_se", "cp", "cp_se", "mean_ci_width"});
    for (const auto& e : r.at("estimands"))
      line(os, {sv, proto, cell(e["estimand"]), cell(e["value"]), cell(e["bias"]), cell(e["bias_se"]), cell(e["variance"]),
                cell(e["exact_variance"]), cell(e["variance_bound"]), cell(e["var_est_mean"]), cell(e["var_est_se"]),
                cell(e["cp"]), cell(e["cp_se"]), cell(e["mean_ci_width"])});
  } else if (proto == "normality_qq") {
    line(os, {"schema_version", "protocol", "estimand", "mean", "sd", "ks", "skewness", "excess_kurtosis"});
    for (const auto& e : r.at("estimands"))
      line(os, {sv, proto, cell(e["estimand"]), cell(e["mean"]), cell(e["sd"]), cell(e["ks"]), cell(e["skewness"]),
                cell(e["excess_kurtosis"])});
  } else if (proto == "order_figure") {
    line(os, {"schema_version", "protocol", "label", "centers", "units", "T", "p1", "p2", "estimand", "mean_p_value",
              "rejection_rate", "overall_rejection_rate"});
    for (const auto& p : r.at("points"))
      for (const auto& s : p.at("statistics"))
        line(os, {sv, proto, cell(p["label"]), cell(p["centers"]), cell(p["units"]), cell(p["T"]), cell(p["p1"]),
                  cell(p["p2"]), cell(s["estimand"]), cell(s["mean_p_value"]), cell(s["rejection_rate"]),
                  cell(p["overall_rejection_rate"])});
  }
  return os.str();
}

std::string qq_to_csv(const json& r) {
  std::ostringstream os;
  os << "schema_version,estimand,theoretical,sample\n";
  if (!r.contains("estimands")) return os.str();
  for (const auto& e : r.at("estimands")) {
    if (!e.contains("qq")) continue;
    for (const auto& pr : e["qq"])
      os << kSchemaVersion << ',' << e["estimand"].get<std::string>() << ',' << format_double(pr[0].get<double>()) << ','
         << format_double(pr[1].get<double>()) << '\n';
  }
  return os.str();
}

}  // namespace mmd
