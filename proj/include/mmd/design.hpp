#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mmd {

// Horizon T and decision points t_0 = 1 < t_1 < ... < t_L <= T.
// The sentinel t_{L+1} = T + 1 is never stored.
struct Design {
  int T = 0;
  std::vector<int> points;

  static Design make(int T, std::vector<int> points);

  int L() const { return static_cast<int>(points.size()) - 1; }
  // t_l for l in [0, L+1]; l = L+1 yields T+1.
  int point(int l) const { return l > L() ? T + 1 : points[static_cast<size_t>(l)]; }

  bool operator==(const Design& o) const { return T == o.T && points == o.points; }
};

enum class StandardKind { independent, blocked, star1, star2 };

StandardKind parse_standard_kind(std::string_view name);
std::string to_string(StandardKind kind);

// Standard designs. Star kinds with p = 0 fall back to the independent design.
Design make_standard_design(StandardKind kind, int T, int p);

// t_1 >= p+2, t_L <= T-p, and t_{l+1} - t_{l-1} >= p for l = 1..L.
bool validate_candidate(const Design& design, int p);

class DecisionContext {
 public:
  DecisionContext(Design design, int p);

  const Design& design() const { return design_; }
  int p() const { return p_; }
  int T() const { return design_.T; }

  // F(t): latest decision point <= t.
  int governing(int t) const;
  // Index l such that t_l = F(t).
  int governing_index(int t) const { return gov_[static_cast<size_t>(t)]; }
  // Decision-point index range [lo, hi] making up F^p(t).
  std::pair<int, int> governing_range(int t) const;

  int exposure_count(int t) const;
  int overlap_count(int t, int t2) const;

 private:
  void check_time(int t) const;

  Design design_;
  int p_;
  std::vector<int> gov_;  // 1-based, gov_[t] = l
};

// counts[j] for j = 1..p+1; counts[0] is unused and kept at zero.
struct JHistogram {
  std::vector<long long> counts;

  long long at(int j) const {
    return j >= 0 && j < static_cast<int>(counts.size()) ? counts[static_cast<size_t>(j)] : 0;
  }
  int max_j() const { return static_cast<int>(counts.size()) - 1; }
};

JHistogram j_histogram(const DecisionContext& ctx);

}  // namespace mmd
