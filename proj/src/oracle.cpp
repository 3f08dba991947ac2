#include "mmd/oracle.hpp"

#include <cmath>

#include "mmd/error.hpp"
#include "mmd/estimation.hpp"

namespace mmd {

std::uint64_t atom_count(const AssignmentPolicy& policy, int N) {
  const int bits = (policy.design.L() + 1) * (N + 1);
  if (bits > kMaxAtomBits)
    fail("instance_too_large", "enumeration needs 2^" + std::to_string(bits) + " atoms, above the 2^" +
                                   std::to_string(kMaxAtomBits) + " guard");
  return std::uint64_t{1} << bits;
}

void visit_atoms(const AssignmentPolicy& policy, const OutcomeModel& model, int N,
                 const std::function<void(double, const Trajectory&)>& fn) {
  policy.validate();
  const std::uint64_t count = atom_count(policy, N);
  const Design& d = policy.design;
  const int P = d.L() + 1;
  Trajectory tr(N, d.T);
  for (std::uint64_t mask = 0; mask < count; ++mask) {
    double prob = 1;
    std::uint64_t m = mask;
    for (int l = 0; l < P; ++l) {
      const bool pick1 = (m & 1) != 0;
      m >>= 1;
      const double q = pick1 ? policy.q1 : policy.q2;
      prob *= pick1 ? policy.r1 : 1 - policy.r1;
      for (int i = 0; i < N; ++i) {
        const bool zi = (m & 1) != 0;
        m >>= 1;
        prob *= zi ? q : 1 - q;
        for (int t = d.point(l); t < d.point(l + 1); ++t) tr.z(i, t) = zi ? 1 : 0;
      }
      for (int t = d.point(l); t < d.point(l + 1); ++t) tr.Q[static_cast<size_t>(t - 1)] = q;
    }
    if (prob == 0) continue;
    realize_outcomes(model, tr);
    fn(prob, tr);
  }
}

std::vector<AtomicOutcome> enumerate_distribution(const AssignmentPolicy& policy, const OutcomeModel& model, int N) {
  std::vector<AtomicOutcome> out;
  out.reserve(static_cast<size_t>(atom_count(policy, N)));
  visit_atoms(policy, model, N, [&](double pr, const Trajectory& tr) { out.push_back({pr, tr}); });
  return out;
}

ExactMoments exact_moments(const AssignmentPolicy& policy, const OutcomeModel& model, int N, int p,
                           const std::array<double, 4>& estimand) {
  const DecisionContext ctx(policy.design, p);
  ExactMoments mo;
  visit_atoms(policy, model, N, [&](double pr, const Trajectory& tr) {
    const auto est = ht_all(tr, ctx, policy);
    mo.total_probability += pr;
    for (size_t e = 0; e < 4; ++e) mo.mean[e] += pr * est[e].point;
  });
  visit_atoms(policy, model, N, [&](double pr, const Trajectory& tr) {
    const auto est = ht_all(tr, ctx, policy);
    for (size_t e = 0; e < 4; ++e) {
      const double dv = est[e].point - mo.mean[e];
      const double dr = est[e].point - estimand[e];
      mo.variance[e] += pr * dv * dv;
      mo.risk[e] += pr * dr * dr;
    }
  });
  return mo;
}

std::array<double, 4> misspecified_estimands(const AssignmentPolicy& policy, const OutcomeModel& model, int N, int p) {
  const DecisionContext ctx(policy.design, p);
  const int T = policy.design.T;
  const int m = model.order();
  // held[i][t][c]
  std::vector<double> held(static_cast<size_t>(N) * T * 4, 0.0);
  std::vector<double> qp(static_cast<size_t>(m) + 1);
  std::vector<std::uint8_t> zp(static_cast<size_t>(m) + 1);
  const double qv[2] = {policy.q1, policy.q2};
  visit_atoms(policy, model, N, [&](double pr, const Trajectory& tr) {
    for (int i = 0; i < N; ++i)
      for (int t = p + 1; t <= T; ++t) {
        const int from = ctx.governing(t - p);
        const int len = std::min(t, m + 1);
        const int start = t - len + 1;
        for (int c = 0; c < 4; ++c) {
          for (int k = 0; k < len; ++k) {
            const int s = start + k;
            const bool fixed = s >= from;
            qp[static_cast<size_t>(k)] = fixed ? qv[cell_q(c)] : tr.q(s);
            zp[static_cast<size_t>(k)] = fixed ? static_cast<std::uint8_t>(cell_z(c)) : tr.z(i, s);
          }
          held[(static_cast<size_t>(i) * T + static_cast<size_t>(t - 1)) * 4 + static_cast<size_t>(c)] +=
              pr * model.eval(i, t, std::span<const double>(qp.data(), static_cast<size_t>(len)),
                              std::span<const std::uint8_t>(zp.data(), static_cast<size_t>(len)));
        }
      }
  });
  CellTable tab(N, T);
  tab.values = std::move(held);
  return cell_estimands(tab, p);
}

CornerResult worst_case_corner_search(const Design& design, const ExperimentParams& params) {
  params.validate();
  AssignmentPolicy pol{design, params.q1, params.q2, params.r1};
  atom_count(pol, params.N);
  CornerResult best;
  bool first = true;
  for (int mask = 0; mask < 16; ++mask) {
    std::array<double, 4> corner{};
    for (int c = 0; c < 4; ++c) corner[static_cast<size_t>(c)] = (mask >> c & 1) ? -params.B : params.B;
    const CellTable tab = CellTable::constant(params.N, params.T, corner);
    const CellModel model(tab, params.q1);
    const auto mo = exact_moments(pol, model, params.N, params.p, cell_estimands(tab, params.p));
    const double obj = combine_risks(mo.risk, params.psi_d, params.psi_s);
    if (first || obj > best.max_objective + 1e-15) {
      best.max_objective = obj;
      best.corner = corner;
      first = false;
    }
  }
  return best;
}

ExhaustiveResult exhaustive_design_search(int T, const ExperimentParams& params) {
  if (T > 18) fail("instance_too_large", "exhaustive design search is limited to T <= 18");
  ExperimentParams pr = params;
  pr.T = T;
  pr.validate();
  ExhaustiveResult best;
  bool found = false;
  const std::uint32_t count = std::uint32_t{1} << (T - 1);
  for (std::uint32_t mask = 0; mask < count; ++mask) {
    std::vector<int> pts{1};
    for (int t = 2; t <= T; ++t)
      if (mask >> (t - 2) & 1) pts.push_back(t);
    Design d = Design::make(T, std::move(pts));
    if (!validate_candidate(d, pr.p)) continue;
    ++best.evaluated;
    const GeneralObjective g = worst_case_objective_general(d, pr);
    if (!g.value) fail("regime_indeterminate", "N lies between the two worst-case regimes");
    const double v = *g.value;
    const double tol = 1e-12 * std::max(1.0, std::abs(best.objective));
    if (!found || v < best.objective - tol || (std::abs(v - best.objective) <= tol && d.points < best.design.points)) {
      best.objective = v;
      best.design = std::move(d);
      found = true;
    }
  }
  if (!found) fail_infeasible("horizon_too_short", "no feasible design exists for this horizon");
  return best;
}

}  // namespace mmd
