#pragma once

#include <array>
#include <string>
#include <vector>

#include "mmd/cells.hpp"
#include "mmd/engine.hpp"
#include "mmd/estimation.hpp"

namespace mmd {

// Designs with points 1, a+1, a+1+b, ..., equal middle gaps b and a last gap of a.
// Blocks k = 1..K-2; block 1 spans [p+1, a], block k >= 2 spans [t_k, t_{k+1}-1]
// with head [t_k, t_k+p-1].
struct BlockStructure {
  int T = 0;
  int p = 0;
  int a = 0;
  int b = 0;
  int K = 0;
  std::vector<int> start;  // start[k], k = 1..K-1 (start[K-1] = T+1); start[0] unused

  int blocks() const { return K - 2; }
  int eta(int k) const { return k == 1 ? 1 : 2; }
  int first(int k) const { return k == 1 ? p + 1 : start[static_cast<size_t>(k)]; }
  int last(int k) const { return start[static_cast<size_t>(k) + 1] - 1; }
  int head_last(int k) const { return k == 1 ? p : start[static_cast<size_t>(k)] + p - 1; }
};

bool is_block_structured(const Design& design, int p);
BlockStructure block_structure(const Design& design, int p);

// Ytilde[k][c][i] and Ycheck[k][c][i], k = 1..K-2.
struct BlockSums {
  int N = 0;
  std::vector<std::array<std::vector<double>, 4>> tilde;
  std::vector<std::array<std::vector<double>, 4>> check;
};

BlockSums block_decompose(const BlockStructure& bs, const CellTable& cells);

// Observed head and tail sums with the head/tail indicators.
struct ObservedBlocks {
  int N = 0;
  std::vector<std::vector<double>> head;        // Ycheck^obs_k
  std::vector<std::vector<double>> tail;        // Delta Y^obs_k
  std::vector<std::vector<int>> head_cell;      // cell of check I_k, or -1
  std::vector<std::vector<int>> tail_cell;      // cell of I_k, or -1
};

ObservedBlocks block_decompose(const BlockStructure& bs, const Trajectory& tr, double q1, double q2);

struct VarianceTerms {
  double A = 0, B = 0, C = 0, D = 0, E = 0, F = 0, G = 0;
  double scale = 0;  // 1 / (N^2 (T-p)^2)
  double total() const { return scale * (A + B + C + D + E + F + G); }
};

struct VarianceParams {
  double q1 = 0.6;
  double q2 = 0.4;
};

VarianceTerms exact_variance_terms(const BlockStructure& bs, const BlockSums& sums, const VarianceParams& vp, Estimand e);
VarianceTerms upper_bound_terms(const BlockStructure& bs, const BlockSums& sums, const VarianceParams& vp, Estimand e);
VarianceTerms estimator_terms(const BlockStructure& bs, const ObservedBlocks& obs, const VarianceParams& vp, Estimand e);

double exact_variance(const BlockStructure& bs, const CellTable& cells, const VarianceParams& vp, Estimand e);
double variance_upper_bound(const BlockStructure& bs, const CellTable& cells, const VarianceParams& vp, Estimand e);
double conservative_variance_estimate(const BlockStructure& bs, const Trajectory& tr, const VarianceParams& vp, Estimand e);

double normal_cdf(double x);
double normal_quantile(double u);

std::pair<double, double> confidence_interval(double point, double var_est, double alpha);

double multicenter_variance(const std::vector<double>& var_ests, const std::vector<double>& weights);

struct OrderTestResult {
  std::array<double, 4> statistic{};
  std::array<double, 4> p_value{};
  std::array<bool, 4> reject{};
  double alpha = 0.05;
  double critical = 0;
  bool overall_reject = false;
};

OrderTestResult order_wald_test(const std::array<double, 4>& est_p1, const std::array<double, 4>& est_p2,
                                const std::array<double, 4>& var_p1, const std::array<double, 4>& var_p2,
                                double alpha);

}  // namespace mmd
