#pragma once

#include <array>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmd/design.hpp"
#include "mmd/engine.hpp"

namespace mmd {

// Order matches cell_estimands and exact_risk.
enum class Estimand { direct_q1 = 0, direct_q2 = 1, spillover_z1 = 2, spillover_z0 = 3 };

inline constexpr std::array<Estimand, 4> kAllEstimands{Estimand::direct_q1, Estimand::direct_q2,
                                                       Estimand::spillover_z1, Estimand::spillover_z0};
std::string to_string(Estimand e);
inline int index_of(Estimand e) { return static_cast<int>(e); }

struct EffectEstimate {
  Estimand id = Estimand::direct_q1;
  int p = 0;
  double point = 0;
  std::vector<double> per_unit;
  std::optional<double> variance;
  std::optional<std::pair<double, double>> ci;
};

// r_q^{J_t} q_z^{J_t}; qi = 0 for q1 and 1 for q2.
double exposure_probability(const DecisionContext& ctx, const AssignmentPolicy& policy, int t, int qi, int z);

// 1 iff Q and Z_i are constant at (q, z) over [t-p, t].
bool constant_path_indicator(const Trajectory& tr, int i, int t, int p, double q, int z);

// Cell (0..3) occupied by (i, t) over the whole window [t-p, t], or -1.
// Result is row-major N x T, entries for t <= p are -1.
std::vector<int> window_cells(const Trajectory& tr, int p, double q1, double q2);

EffectEstimate ht_direct(const Trajectory& tr, const DecisionContext& ctx, const AssignmentPolicy& policy, int qi);
EffectEstimate ht_spillover(const Trajectory& tr, const DecisionContext& ctx, const AssignmentPolicy& policy, int z);
std::array<EffectEstimate, 4> ht_all(const Trajectory& tr, const DecisionContext& ctx, const AssignmentPolicy& policy);

EffectEstimate pooled_estimate(const std::vector<EffectEstimate>& centers, const std::vector<double>& weights);

void check_trajectory(const Trajectory& tr, const AssignmentPolicy& policy);

}  // namespace mmd
