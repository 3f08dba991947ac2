#pragma once

#include <array>
#include <cstdint>
#include <functional>

#include "mmd/engine.hpp"
#include "mmd/minimax.hpp"

namespace mmd {

inline constexpr int kMaxAtomBits = 24;

std::uint64_t atom_count(const AssignmentPolicy& policy, int N);

// Calls fn(probability, trajectory) for every (selection, assignment) atom.
void visit_atoms(const AssignmentPolicy& policy, const OutcomeModel& model, int N,
                 const std::function<void(double, const Trajectory&)>& fn);

struct AtomicOutcome {
  double probability = 0;
  Trajectory trajectory;
};

std::vector<AtomicOutcome> enumerate_distribution(const AssignmentPolicy& policy, const OutcomeModel& model, int N);

struct ExactMoments {
  std::array<double, 4> mean{};
  std::array<double, 4> variance{};
  std::array<double, 4> risk{};
  double total_probability = 0;
};

ExactMoments exact_moments(const AssignmentPolicy& policy, const OutcomeModel& model, int N, int p,
                           const std::array<double, 4>& estimand);

// Estimands when the estimation order p may be below the model order: the path
// from F(t-p) on is held at the cell while earlier entries follow the design.
std::array<double, 4> misspecified_estimands(const AssignmentPolicy& policy, const OutcomeModel& model, int N, int p);

struct CornerResult {
  double max_objective = 0;
  std::array<double, 4> corner{};
};

CornerResult worst_case_corner_search(const Design& design, const ExperimentParams& params);

struct ExhaustiveResult {
  Design design;
  double objective = 0;
  long long evaluated = 0;
};

ExhaustiveResult exhaustive_design_search(int T, const ExperimentParams& params);

}  // namespace mmd
