#include "mmd/estimation.hpp"

#include <cmath>

#include "mmd/error.hpp"

namespace mmd {

std::string to_string(Estimand e) {
  switch (e) {
    case Estimand::direct_q1: return "direct_q1";
    case Estimand::direct_q2: return "direct_q2";
    case Estimand::spillover_z1: return "spillover_z1";
    case Estimand::spillover_z0: return "spillover_z0";
  }
  return "?";
}

double exposure_probability(const DecisionContext& ctx, const AssignmentPolicy& policy, int t, int qi, int z) {
  const int J = ctx.exposure_count(t);
  const double r = qi == 0 ? policy.r1 : 1 - policy.r1;
  const double q = qi == 0 ? policy.q1 : policy.q2;
  const double qz = z ? q : 1 - q;
  return std::pow(r, J) * std::pow(qz, J);
}

bool constant_path_indicator(const Trajectory& tr, int i, int t, int p, double q, int z) {
  if (t - p < 1 || t > tr.T) fail("time_out_of_range", "indicator needs p+1 <= t <= T");
  for (int s = t - p; s <= t; ++s)
    if (tr.q(s) != q || tr.z(i, s) != z) return false;
  return true;
}

void check_trajectory(const Trajectory& tr, const AssignmentPolicy& policy) {
  if (tr.T != policy.design.T)
    fail("horizon_mismatch", "horizon mismatch: trajectory has T=" + std::to_string(tr.T) +
                                 " but design has T=" + std::to_string(policy.design.T));
  for (int t = 1; t <= tr.T; ++t)
    if (tr.q(t) != policy.q1 && tr.q(t) != policy.q2)
      fail("probability_mismatch", "trajectory q at time " + std::to_string(t) + " matches neither q1 nor q2");
}

std::vector<int> window_cells(const Trajectory& tr, int p, double q1, double q2) {
  std::vector<int> out(static_cast<size_t>(tr.N) * tr.T, -1);
  for (int i = 0; i < tr.N; ++i) {
    int run = 0;
    int prev = -1;
    for (int t = 1; t <= tr.T; ++t) {
      const double q = tr.q(t);
      const int qi = q == q1 ? 0 : (q == q2 ? 1 : -1);
      const int c = qi < 0 ? -1 : cell_index(qi, tr.z(i, t));
      run = (c >= 0 && c == prev) ? run + 1 : 1;
      prev = c;
      if (t > p && c >= 0 && run >= p + 1) out[tr.idx(i, t)] = c;
    }
  }
  return out;
}

namespace {

// positive and negative cells for each estimand
constexpr int kPos[4] = {0, 2, 0, 1};
constexpr int kNeg[4] = {1, 3, 2, 3};

std::array<EffectEstimate, 4> estimate_impl(const Trajectory& tr, const DecisionContext& ctx,
                                            const AssignmentPolicy& policy, const std::array<bool, 4>& want) {
  check_trajectory(tr, policy);
  if (!(ctx.design() == policy.design)) fail("design_mismatch", "context and policy designs differ");
  const int p = ctx.p();
  const int T = tr.T;
  // inverse probabilities per (t, cell)
  std::vector<std::array<double, 4>> ip(static_cast<size_t>(T) + 1);
  for (int t = p + 1; t <= T; ++t)
    for (int c = 0; c < 4; ++c)
      ip[static_cast<size_t>(t)][static_cast<size_t>(c)] = 1.0 / exposure_probability(ctx, policy, t, cell_q(c), cell_z(c));
  const std::vector<int> cells = window_cells(tr, p, policy.q1, policy.q2);
  std::array<EffectEstimate, 4> out;
  const double scale = 1.0 / (T - p);
  for (int e = 0; e < 4; ++e) {
    out[static_cast<size_t>(e)].id = static_cast<Estimand>(e);
    out[static_cast<size_t>(e)].p = p;
    if (want[static_cast<size_t>(e)]) out[static_cast<size_t>(e)].per_unit.assign(static_cast<size_t>(tr.N), 0.0);
  }
  for (int i = 0; i < tr.N; ++i) {
    std::array<double, 4> s{0, 0, 0, 0};
    for (int t = p + 1; t <= T; ++t) {
      const int c = cells[tr.idx(i, t)];
      if (c < 0) continue;
      const double v = tr.y(i, t) * ip[static_cast<size_t>(t)][static_cast<size_t>(c)];
      for (int e = 0; e < 4; ++e) {
        if (c == kPos[e]) s[static_cast<size_t>(e)] += v;
        else if (c == kNeg[e]) s[static_cast<size_t>(e)] -= v;
      }
    }
    for (int e = 0; e < 4; ++e)
      if (want[static_cast<size_t>(e)]) out[static_cast<size_t>(e)].per_unit[static_cast<size_t>(i)] = s[static_cast<size_t>(e)] * scale;
  }
  for (int e = 0; e < 4; ++e) {
    auto& est = out[static_cast<size_t>(e)];
    if (!want[static_cast<size_t>(e)]) continue;
    double sum = 0;
    for (double v : est.per_unit) sum += v;
    est.point = sum / tr.N;
  }
  return out;
}

}  // namespace

EffectEstimate ht_direct(const Trajectory& tr, const DecisionContext& ctx, const AssignmentPolicy& policy, int qi) {
  if (qi != 0 && qi != 1) fail("invalid_level", "direct effect level must be q1 or q2");
  std::array<bool, 4> want{};
  want[static_cast<size_t>(qi)] = true;
  return estimate_impl(tr, ctx, policy, want)[static_cast<size_t>(qi)];
}

EffectEstimate ht_spillover(const Trajectory& tr, const DecisionContext& ctx, const AssignmentPolicy& policy, int z) {
  if (z != 0 && z != 1) fail("invalid_level", "spillover level must be z=0 or z=1");
  const size_t e = z == 1 ? 2 : 3;
  std::array<bool, 4> want{};
  want[e] = true;
  return estimate_impl(tr, ctx, policy, want)[e];
}

std::array<EffectEstimate, 4> ht_all(const Trajectory& tr, const DecisionContext& ctx, const AssignmentPolicy& policy) {
  return estimate_impl(tr, ctx, policy, {true, true, true, true});
}

EffectEstimate pooled_estimate(const std::vector<EffectEstimate>& centers, const std::vector<double>& weights) {
  if (centers.empty()) fail("invalid_centers", "no center estimates to pool");
  if (centers.size() != weights.size()) fail("length_mismatch", "estimates and weights differ in length");
  double wsum = 0;
  for (double w : weights) wsum += w;
  if (std::abs(wsum - 1) > 1e-9) fail("invalid_weights", "center weights must sum to 1");
  EffectEstimate out;
  out.id = centers.front().id;
  out.p = centers.front().p;
  for (size_t g = 0; g < centers.size(); ++g) {
    if (centers[g].id != out.id || centers[g].p != out.p)
      fail("estimand_mismatch", "pooled estimates must share the same estimand and order");
    out.point += weights[g] * centers[g].point;
  }
  return out;
}

}  // namespace mmd
