#include "mmd/design.hpp"

#include <algorithm>

#include "mmd/error.hpp"

namespace mmd {

Design Design::make(int T, std::vector<int> points) {
  if (T < 1) fail("invalid_design", "T must be a positive integer, got " + std::to_string(T));
  if (points.empty() || points.front() != 1)
    fail("invalid_design", "decision_points must start at 1");
  for (size_t k = 0; k < points.size(); ++k) {
    if (points[k] < 1 || points[k] > T)
      fail("invalid_design", "decision_points entry " + std::to_string(points[k]) +
                                 " lies outside [1, " + std::to_string(T) + "]");
    if (k > 0 && points[k] <= points[k - 1])
      fail("invalid_design", "decision_points must be strictly increasing");
  }
  Design d;
  d.T = T;
  d.points = std::move(points);
  return d;
}

StandardKind parse_standard_kind(std::string_view name) {
  if (name == "independent") return StandardKind::independent;
  if (name == "blocked") return StandardKind::blocked;
  if (name == "star1") return StandardKind::star1;
  if (name == "star2") return StandardKind::star2;
  fail("invalid_kind", "unknown design kind '" + std::string(name) +
                           "' (expected independent, blocked, star1 or star2)");
}

std::string to_string(StandardKind kind) {
  switch (kind) {
    case StandardKind::independent: return "independent";
    case StandardKind::blocked: return "blocked";
    case StandardKind::star1: return "star1";
    case StandardKind::star2: return "star2";
  }
  return "?";
}

Design make_standard_design(StandardKind kind, int T, int p) {
  if (T < 1) fail("invalid_horizon", "T must be >= 1");
  if (p < 0) fail("invalid_order", "p must be >= 0");
  std::vector<int> pts;
  if (kind == StandardKind::independent || (p == 0 && kind != StandardKind::blocked)) {
    for (int t = 1; t <= T; ++t) pts.push_back(t);
    return Design::make(T, std::move(pts));
  }
  if (kind == StandardKind::blocked) {
    for (int t = 1; t <= T; t += p + 1) pts.push_back(t);
    return Design::make(T, std::move(pts));
  }
  if (kind == StandardKind::star1) {
    const int rest = T - 4 * p;
    if (rest < 0 || rest % p != 0)
      fail_infeasible("divisibility", "star1 needs T - 4p to be a non-negative multiple of p (T=" +
                                          std::to_string(T) + ", p=" + std::to_string(p) + ")");
    const int K = rest / p + 4;
    pts.push_back(1);
    for (int k = 2; k <= K - 2; ++k) pts.push_back(k * p + 1);
    return Design::make(T, std::move(pts));
  }
  const int rest = T - 4 * p - 2;
  if (rest < 0 || rest % (p + 1) != 0)
    fail_infeasible("divisibility",
                    "star2 needs T - 4p - 2 to be a non-negative multiple of p+1 (T=" +
                        std::to_string(T) + ", p=" + std::to_string(p) + ")");
  const int K = rest / (p + 1) + 4;
  pts.push_back(1);
  for (int k = 2; k <= K - 2; ++k) pts.push_back(k * (p + 1));
  return Design::make(T, std::move(pts));
}

bool validate_candidate(const Design& d, int p) {
  const int L = d.L();
  if (L < 1) return false;
  if (d.point(1) < p + 2) return false;
  if (d.point(L) > d.T - p) return false;
  for (int l = 1; l <= L; ++l)
    if (d.point(l + 1) - d.point(l - 1) < p) return false;
  return true;
}

DecisionContext::DecisionContext(Design design, int p) : design_(std::move(design)), p_(p) {
  if (p < 0) fail("invalid_order", "p must be >= 0");
  if (p >= design_.T)
    fail("invalid_order", "p must be smaller than T (no estimable periods otherwise)");
  gov_.assign(static_cast<size_t>(design_.T) + 1, 0);
  int l = 0;
  for (int t = 1; t <= design_.T; ++t) {
    while (l + 1 <= design_.L() && design_.point(l + 1) <= t) ++l;
    gov_[static_cast<size_t>(t)] = l;
  }
}

void DecisionContext::check_time(int t) const {
  if (t < p_ + 1 || t > design_.T)
    fail("time_out_of_range", "time " + std::to_string(t) + " outside [p+1, T] = [" +
                                  std::to_string(p_ + 1) + ", " + std::to_string(design_.T) + "]");
}

int DecisionContext::governing(int t) const {
  if (t < 1 || t > design_.T) fail("time_out_of_range", "time " + std::to_string(t) + " outside [1, T]");
  return design_.point(gov_[static_cast<size_t>(t)]);
}

std::pair<int, int> DecisionContext::governing_range(int t) const {
  check_time(t);
  return {gov_[static_cast<size_t>(t - p_)], gov_[static_cast<size_t>(t)]};
}

int DecisionContext::exposure_count(int t) const {
  auto [lo, hi] = governing_range(t);
  return hi - lo + 1;
}

int DecisionContext::overlap_count(int t, int t2) const {
  auto [lo1, hi1] = governing_range(t);
  auto [lo2, hi2] = governing_range(t2);
  return std::max(0, std::min(hi1, hi2) - std::max(lo1, lo2) + 1);
}

JHistogram j_histogram(const DecisionContext& ctx) {
  const int p = ctx.p();
  const int T = ctx.T();
  JHistogram h;
  h.counts.assign(static_cast<size_t>(p) + 2, 0);
  std::vector<std::pair<int, int>> r;
  r.reserve(static_cast<size_t>(T - p));
  for (int t = p + 1; t <= T; ++t) r.push_back(ctx.governing_range(t));
  const size_t n = r.size();
  for (size_t a = 0; a < n; ++a) {
    h.counts[static_cast<size_t>(r[a].second - r[a].first + 1)] += 1;
    // Ranges are monotone in t, so overlaps vanish once lo2 > hi1.
    for (size_t b = a + 1; b < n && r[b].first <= r[a].second; ++b) {
      const int o = std::min(r[a].second, r[b].second) - std::max(r[a].first, r[b].first) + 1;
      if (o > 0) h.counts[static_cast<size_t>(o)] += 2;  // ordered pairs
    }
  }
  return h;
}

}  // namespace mmd
