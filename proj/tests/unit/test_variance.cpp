#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "../common/brute.hpp"
#include "mmd/error.hpp"
#include "mmd/oracle.hpp"
#include "mmd/variance.hpp"

using namespace mmd;

namespace {

CellTable random_cells(int N, int T, std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  CellTable c(N, T);
  for (double& x : c.values) x = u(g);
  return c;
}

const VarianceParams kVp{0.6, 0.4};

}  // namespace

TEST_CASE("block structure for T=4, p=1, design {1,3}") {
  const Design d = Design::make(4, {1, 3});
  REQUIRE(is_block_structured(d, 1));
  const BlockStructure bs = block_structure(d, 1);
  CHECK(bs.blocks() == 2);
  CHECK(bs.first(1) == 2);
  CHECK(bs.last(1) == 2);
  CHECK(bs.first(2) == 3);
  CHECK(bs.last(2) == 4);
  const CellTable c = CellTable::constant(1, 4, {2.0, 2.0, 2.0, 2.0});
  const BlockSums s = block_decompose(bs, c);
  for (int cell = 0; cell < 4; ++cell) {
    CHECK(s.check[1][static_cast<size_t>(cell)][0] == 0.0);  // first block head is empty
    CHECK(s.tilde[1][static_cast<size_t>(cell)][0] == doctest::Approx(2.0));
    CHECK(s.tilde[2][static_cast<size_t>(cell)][0] == doctest::Approx(4.0));
  }
}

TEST_CASE("non-block designs are rejected") {
  CHECK_FALSE(is_block_structured(Design::make(6, {1, 2, 4}), 1));
  CHECK_THROWS_AS(block_structure(Design::make(6, {1, 2, 4}), 1), Error);
  CHECK_FALSE(is_block_structured(Design::make(6, {1, 3, 4, 5, 6}), 1));  // last gap differs from the first
}

TEST_CASE("zero outcomes have zero variance") {
  const BlockStructure bs = block_structure(Design::make(8, {1, 4, 6}), 1);
  const CellTable c(2, 8);
  for (Estimand e : kAllEstimands) {
    CHECK(exact_variance(bs, c, kVp, e) == 0.0);
    CHECK(variance_upper_bound(bs, c, kVp, e) == 0.0);
  }
}

TEST_CASE("exact variance equals brute-force enumeration") {
  std::mt19937_64 g(17);
  const std::vector<std::pair<int, std::vector<int>>> inst = {
      {4, {1, 3}}, {6, {1, 3, 4, 5}}, {8, {1, 4, 6}}, {8, {1, 3, 4, 5, 6, 7}}, {9, {1, 4, 6, 7}}};
  for (const auto& [T, pts] : inst)
    for (int N : {1, 2}) {
      const Design d = Design::make(T, pts);
      if (!is_block_structured(d, 1)) continue;
      const BlockStructure bs = block_structure(d, 1);
      const CellTable c = random_cells(N, T, g);
      const auto b = brute::run(brute::Instance{T, pts, N, 1, 0.6, 0.4, 0.5, c.values});
      for (Estimand e : kAllEstimands)
        CHECK(std::abs(exact_variance(bs, c, kVp, e) - b.var[static_cast<size_t>(e)]) < 1e-10);
    }
}

TEST_CASE("exact variance for p=2 equals brute-force enumeration") {
  std::mt19937_64 g(5);
  const std::vector<int> pts{1, 4, 6, 8};  // a=3, b=2, last gap 3
  const Design d = Design::make(10, pts);
  REQUIRE(is_block_structured(d, 2));
  const BlockStructure bs = block_structure(d, 2);
  const CellTable c = random_cells(1, 10, g);
  const auto b = brute::run(brute::Instance{10, pts, 1, 2, 0.6, 0.4, 0.5, c.values});
  for (Estimand e : kAllEstimands) CHECK(std::abs(exact_variance(bs, c, kVp, e) - b.var[static_cast<size_t>(e)]) < 1e-10);
}

TEST_CASE("upper bound dominates exact variance") {
  std::mt19937_64 g(3);
  const BlockStructure bs = block_structure(Design::make(8, {1, 3, 4, 5, 6, 7}), 1);
  int strict = 0, total = 0;
  for (int k = 0; k < 200; ++k) {
    const CellTable c = random_cells(3, 8, g);
    for (Estimand e : kAllEstimands) {
      const double ex = exact_variance(bs, c, kVp, e), ub = variance_upper_bound(bs, c, kVp, e);
      CHECK(ub >= ex - 1e-12);
      strict += ub > ex + 1e-12;
      ++total;
    }
  }
  CHECK(strict > total * 95 / 100);
}

TEST_CASE("conservative estimator is unbiased for the bound") {
  std::mt19937_64 g(23);
  for (const auto& [T, pts] : std::vector<std::pair<int, std::vector<int>>>{{6, {1, 3, 4, 5}}, {8, {1, 4, 6}}})
    for (int N : {1, 2}) {
      const Design d = Design::make(T, pts);
      const BlockStructure bs = block_structure(d, 1);
      const CellTable c = random_cells(N, T, g);
      const CellModel model(c, 0.6);
      const AssignmentPolicy pol{d, 0.6, 0.4, 0.5};
      std::array<double, 4> m{};
      visit_atoms(pol, model, N, [&](double w, const Trajectory& tr) {
        for (Estimand e : kAllEstimands) m[static_cast<size_t>(e)] += w * conservative_variance_estimate(bs, tr, kVp, e);
      });
      for (Estimand e : kAllEstimands)
        CHECK(m[static_cast<size_t>(e)] == doctest::Approx(variance_upper_bound(bs, c, kVp, e)).epsilon(1e-10));
    }
}

TEST_CASE("variance assemblies are invariant under unit relabeling") {
  std::mt19937_64 g(9);
  const BlockStructure bs = block_structure(Design::make(8, {1, 4, 6}), 1);
  const CellTable c = random_cells(3, 8, g);
  CellTable perm(3, 8);
  const int map[3] = {2, 0, 1};
  for (int i = 0; i < 3; ++i)
    for (int t = 1; t <= 8; ++t)
      for (int k = 0; k < 4; ++k) perm.at(map[i], t, k) = c.at(i, t, k);
  for (Estimand e : kAllEstimands) {
    CHECK(exact_variance(bs, perm, kVp, e) == doctest::Approx(exact_variance(bs, c, kVp, e)).epsilon(1e-12));
    CHECK(variance_upper_bound(bs, perm, kVp, e) == doctest::Approx(variance_upper_bound(bs, c, kVp, e)).epsilon(1e-12));
  }
}

TEST_CASE("normal quantile accuracy") {
  // reference values of the standard normal quantile
  const std::pair<double, double> ref[] = {{0.975, 1.959963984540054},
                                           {0.5, 0.0},
                                           {0.9, 1.2815515655446004},
                                           {0.001, -3.090232306167813},
                                           {1e-10, -6.361340902404056}};
  for (auto [u, x] : ref) CHECK(std::abs(normal_quantile(u) - x) < 1e-9);
  for (double x : {-3.0, -0.5, 0.0, 1.3, 4.0}) CHECK(std::abs(normal_quantile(normal_cdf(x)) - x) < 1e-9);
}

TEST_CASE("confidence intervals") {
  auto [lo, hi] = confidence_interval(1.0, 4.0, 0.05);
  CHECK(lo == doctest::Approx(1 - 1.959963984540054 * 2));
  CHECK(hi == doctest::Approx(1 + 1.959963984540054 * 2));
  auto [lo2, hi2] = confidence_interval(1.0, 4.0, 0.01);
  CHECK(lo2 < lo);
  CHECK(hi2 > hi);
  auto [lo3, hi3] = confidence_interval(1.0, -2.0, 0.05);
  CHECK(lo3 == 1.0);
  CHECK(hi3 == 1.0);
  CHECK(multicenter_variance({1.0, 1.0}, {0.5, 0.5}) == doctest::Approx(0.5));
}

TEST_CASE("order test") {
  const std::array<double, 4> a{1, 2, 3, 4}, v{1, 1, 1, 1};
  const OrderTestResult same = order_wald_test(a, a, v, v, 0.05);
  for (size_t k = 0; k < 4; ++k) {
    CHECK(same.statistic[k] == 0.0);
    CHECK(same.p_value[k] == doctest::Approx(1.0));
  }
  CHECK_FALSE(same.overall_reject);
  const std::array<double, 4> b{1 + 3 * std::sqrt(2.0), 2, 3, 4};
  const OrderTestResult r = order_wald_test(b, a, v, v, 0.05);
  CHECK(r.statistic[0] == doctest::Approx(3.0));
  CHECK(r.reject[0]);
  CHECK(r.overall_reject);
  CHECK(r.p_value[0] == doctest::Approx(2 * (1 - normal_cdf(3.0))));
  const std::array<double, 4> zero{};
  CHECK_THROWS_AS(order_wald_test(a, b, zero, zero, 0.05), Error);
}
