#include "mmd/verify.hpp"

#include <algorithm>
#include <cmath>

#include "mmd/error.hpp"
#include "mmd/estimation.hpp"
#include "mmd/oracle.hpp"
#include "mmd/variance.hpp"

namespace mmd {

namespace {

struct Tiny {
  int T;
  std::vector<int> points;
  int N;
};

// block-structured for p = 1
const std::vector<Tiny>& tiny_instances() {
  static const std::vector<Tiny> v = {
      {4, {1, 3}, 1}, {4, {1, 3}, 2}, {6, {1, 3, 4, 5}, 1}, {6, {1, 3, 4, 5}, 2},
      {8, {1, 4, 6}, 1}, {8, {1, 4, 6}, 2}, {8, {1, 3, 4, 5, 6, 7}, 1}, {8, {1, 3, 4, 5, 6, 7}, 2},
  };
  return v;
}

CellTable random_cells(int N, int T, Rng& rng) {
  CellTable tab(N, T);
  for (double& x : tab.values) x = 2 * rng.uniform() - 1;
  return tab;
}

void note(CheckResult& r, double err, double tol) {
  ++r.cases;
  r.max_error = std::max(r.max_error, err);
  if (!(err <= tol)) r.passed = false;
}

CheckResult check_golden() {
  CheckResult r{"standard_designs_T16_p2", true, 0, 0, ""};
  const std::pair<StandardKind, std::vector<int>> rows[] = {
      {StandardKind::star1, {1, 5, 7, 9, 11, 13}},
      {StandardKind::star2, {1, 6, 9, 12}},
      {StandardKind::independent, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16}},
      {StandardKind::blocked, {1, 4, 7, 10, 13, 16}},
  };
  for (const auto& [k, pts] : rows) {
    ++r.cases;
    if (make_standard_design(k, 16, 2).points != pts) {
      r.passed = false;
      r.detail += to_string(k) + " mismatch; ";
    }
  }
  return r;
}

}  // namespace

std::vector<CheckResult> run_oracle_suite(std::uint64_t seed, const std::function<void(const CheckResult&)>& on_done) {
  std::vector<CheckResult> out;
  auto push = [&](CheckResult r) {
    if (on_done) on_done(r);
    out.push_back(std::move(r));
  };
  push(check_golden());

  Rng rng(seed);
  const VarianceParams vp{0.6, 0.4};
  CheckResult var{"exact_variance_vs_enumeration", true, 0, 0, ""};
  CheckResult unb{"ht_unbiased_vs_enumeration", true, 0, 0, ""};
  CheckResult est{"variance_estimator_mean_vs_bound", true, 0, 0, ""};
  CheckResult bnd{"bound_dominates_exact_variance", true, 0, 0, ""};
  CheckResult pair{"pairwise_risk_vs_enumeration", true, 0, 0, ""};
  for (const Tiny& ti : tiny_instances()) {
    const Design d = Design::make(ti.T, ti.points);
    const AssignmentPolicy pol{d, vp.q1, vp.q2, 0.5};
    const BlockStructure bs = block_structure(d, 1);
    const DecisionContext ctx(d, 1);
    ExperimentParams ep;
    ep.N = ti.N;
    ep.T = ti.T;
    ep.p = 1;
    const int reps = atom_count(pol, ti.N) > (1u << 16) ? 1 : 3;
    for (int rep = 0; rep < reps; ++rep) {
      const CellTable cells = random_cells(ti.N, ti.T, rng);
      PathTableModel model(ti.N, ti.T, 1, vp.q1, 1.0, rng.engine()());
      model.set_cells(cells);
      const auto tau = cell_estimands(cells, 1);
      const ExactMoments mo = exact_moments(pol, model, ti.N, 1, tau);
      const auto pr = exact_risk(ctx, ep, cells);
      std::array<double, 4> emean{};
      visit_atoms(pol, model, ti.N, [&](double w, const Trajectory& tr) {
        for (size_t e = 0; e < 4; ++e) emean[e] += w * conservative_variance_estimate(bs, tr, vp, static_cast<Estimand>(e));
      });
      for (size_t e = 0; e < 4; ++e) {
        const auto id = static_cast<Estimand>(e);
        const double ex = exact_variance(bs, cells, vp, id);
        const double ub = variance_upper_bound(bs, cells, vp, id);
        note(var, std::abs(ex - mo.variance[e]), 1e-10);
        note(unb, std::abs(mo.mean[e] - tau[e]), 1e-12);
        note(est, std::abs(emean[e] - ub), 1e-10);
        note(bnd, std::max(0.0, ex - ub), 1e-12);
        note(pair, std::abs(pr[e] - mo.risk[e]), 1e-10);
      }
    }
  }
  push(var);
  push(unb);
  push(est);
  push(bnd);

  // pairwise risk on designs without block structure and with r != 0.5
  const std::vector<std::pair<int, std::vector<int>>> loose = {{5, {1, 2, 4}}, {6, {1, 4}}, {7, {1, 3, 6}}};
  for (const auto& [T, pts] : loose)
    for (double r1 : {0.5, 0.3}) {
      const Design d = Design::make(T, pts);
      const AssignmentPolicy pol{d, vp.q1, vp.q2, r1};
      ExperimentParams ep;
      ep.N = 2;
      ep.T = T;
      ep.p = 1;
      ep.r1 = r1;
      const DecisionContext ctx(d, 1);
      const CellTable cells = random_cells(2, T, rng);
      PathTableModel model(2, T, 1, vp.q1, 1.0, rng.engine()());
      model.set_cells(cells);
      const ExactMoments mo = exact_moments(pol, model, 2, 1, cell_estimands(cells, 1));
      const auto pr = exact_risk(ctx, ep, cells);
      for (size_t e = 0; e < 4; ++e) note(pair, std::abs(pr[e] - mo.risk[e]), 1e-10);
    }
  push(pair);

  CheckResult corner{"worst_case_objective_vs_corner_search", true, 0, 0, ""};
  for (int N : {1, 2})
    for (const auto& [T, pts] : std::vector<std::pair<int, std::vector<int>>>{{6, {1, 3, 5}}, {7, {1, 4, 6}}, {8, {1, 3, 5, 7}}})
      for (double psi : {0.0, 0.5, 1.0}) {
        ExperimentParams ep;
        ep.N = N;
        ep.T = T;
        ep.p = 1;
        ep.psi_d = psi;
        ep.psi_s = 1 - psi;
        const Design d = Design::make(T, pts);
        if (!validate_candidate(d, 1)) continue;
        const GeneralObjective g = worst_case_objective_general(d, ep);
        if (!g.value) continue;
        const CornerResult cr = worst_case_corner_search(d, ep);
        note(corner, std::abs(*g.value - cr.max_objective), 1e-10);
      }
  push(corner);

  CheckResult alg{"algorithm_vs_exhaustive_search", true, 0, 0, ""};
  for (int T = 8; T <= 12; ++T)
    for (int p : {1, 2})
      for (double psi : {0.0, 0.5, 1.0}) {
        ExperimentParams ep;
        ep.N = 20;
        ep.T = T;
        ep.p = p;
        ep.psi_d = psi;
        ep.psi_s = 1 - psi;
        try {
          const DesignSearchResult a = optimal_design(ep);
          const ExhaustiveResult x = exhaustive_design_search(T, ep);
          note(alg, std::abs(a.objective - x.objective), 1e-9 * std::max(1.0, x.objective));
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::infeasible) throw;
        }
      }
  push(alg);
  return out;
}

}  // namespace mmd
