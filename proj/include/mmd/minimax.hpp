#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "mmd/cells.hpp"
#include "mmd/design.hpp"

namespace mmd {

struct ExperimentParams {
  int N = 1;
  int T = 1;
  int p = 0;
  double q1 = 0.6;
  double q2 = 0.4;
  double r1 = 0.5;  // chance of selecting q1 at a decision point
  double psi_d = 0.5;
  double psi_s = 0.5;
  double B = 1.0;

  double r2() const { return 1.0 - r1; }
  double r_of(int qi) const { return qi == 0 ? r1 : 1.0 - r1; }
  double q_of(int qi) const { return qi == 0 ? q1 : q2; }
  void validate() const;
};

struct GammaSet {
  double g1d = 0, g2d = 0, g3d = 0;
  double g1s = 0, g2s = 0, g3s = 0;
  double g1 = 0, g2 = 0, g3 = 0;
  double theta = 0;
};

GammaSet gamma_coefficients(const ExperimentParams& params);

enum class Regime { indeterminate = 0, large_n = 1, small_n = 2 };
std::string to_string(Regime r);
Regime regime_of(const ExperimentParams& params);

// Per-J worst-case coefficients (B^2 included, (T-p)^-2 not).
// alpha[J][qi], beta[J][z] and zeta[J] for J = 1..p+1.
struct WorstCaseTerms {
  Regime regime = Regime::large_n;
  std::vector<std::array<double, 2>> alpha;
  std::vector<std::array<double, 2>> beta;
  std::vector<double> zeta;
};

WorstCaseTerms worst_case_terms(const ExperimentParams& params, Regime regime);

struct GeneralObjective {
  Regime regime = Regime::indeterminate;
  double large_n = 0;  // value at the +-B corner
  double small_n = 0;  // value at the +B/+B corner
  std::optional<double> value;
};

GeneralObjective worst_case_objective_general(const Design& design, const ExperimentParams& params);
double worst_case_objective_closed(const Design& design, const ExperimentParams& params);

struct DesignSearchResult {
  int a_star = 0;
  int b_star = 0;
  bool equal_ends = true;
  int L = 0;
  double theta_star = 0;
  double objective = 0;
  Design design;
};

DesignSearchResult optimal_design(const ExperimentParams& params);

struct ClosedFormResult {
  Design design;
  std::string source;  // star1, star2 or algorithm
  bool fallback = false;
  double theta_star = 0;
};

ClosedFormResult closed_form_design(const ExperimentParams& params);

struct SelectionResult {
  double r1 = 0.5;
  double r2 = 0.5;
  Regime regime = Regime::large_n;
  double r1_large_n = 0.5;
  double r1_small_n = 0.5;
  bool large_n_valid = false;
  bool small_n_valid = false;
};

double selection_objective(const ExperimentParams& params, const JHistogram& hist, double r1,
                           Regime regime);
SelectionResult optimal_selection_probability(const ExperimentParams& params,
                                              const JHistogram& hist, bool large_n_limit = false);

// Exact mean squared error of the four HT estimators for a fixed constant-path
// table, any r. Order: direct q1, direct q2, spillover z=1, spillover z=0.
std::array<double, 4> exact_risk(const DecisionContext& ctx, const ExperimentParams& params,
                                 const CellTable& cells);

// psi-weighted objective from the four risks.
double combine_risks(const std::array<double, 4>& risks, double psi_d, double psi_s);

}  // namespace mmd
