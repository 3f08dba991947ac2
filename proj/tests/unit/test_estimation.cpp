#include "doctest.h"

#include <cmath>

#include "../common/brute.hpp"
#include "mmd/error.hpp"
#include "mmd/estimation.hpp"
#include "mmd/oracle.hpp"

using namespace mmd;

namespace {

CellTable wavy(int N, int T, double phase) {
  CellTable c(N, T);
  for (size_t k = 0; k < c.values.size(); ++k) c.values[k] = std::cos(0.9 * static_cast<double>(k) + phase) * 3;
  return c;
}

}  // namespace

TEST_CASE("exposure probability equals brute-force frequency") {
  const std::vector<int> pts{1, 3, 4, 6};
  const Design d = Design::make(7, pts);
  const AssignmentPolicy pol{d, 0.7, 0.2, 0.35};
  for (int p : {1, 2}) {
    const DecisionContext ctx(d, p);
    brute::Instance in{7, pts, 1, p, 0.7, 0.2, 0.35, std::vector<double>(28, 0.0)};
    for (int t = p + 1; t <= 7; ++t)
      for (int c = 0; c < 4; ++c) {
        const double f = brute::expect(in, [&](const brute::Atom& a) { return brute::window_cell(in, a, 0, t) == c ? 1.0 : 0.0; });
        CHECK(exposure_probability(ctx, pol, t, c / 2, 1 - c % 2) == doctest::Approx(f).epsilon(1e-13));
      }
  }
}

TEST_CASE("HT estimators are unbiased and match brute-force moments") {
  for (const auto& [T, pts] : std::vector<std::pair<int, std::vector<int>>>{{5, {1, 3}}, {6, {1, 2, 5}}, {6, {1, 4}}})
    for (int N : {1, 2})
      for (double r : {0.5, 0.25}) {
        const Design d = Design::make(T, pts);
        const AssignmentPolicy pol{d, 0.6, 0.4, r};
        const CellTable cells = wavy(N, T, r + N);
        const CellModel model(cells, 0.6);
        const ExactMoments mo = exact_moments(pol, model, N, 1, cell_estimands(cells, 1));
        brute::Instance in{T, pts, N, 1, 0.6, 0.4, r, cells.values};
        const auto b = brute::run(in);
        for (size_t k = 0; k < 4; ++k) {
          CHECK(b.mean[k] == doctest::Approx(b.truth[k]).epsilon(1e-12));
          CHECK(mo.mean[k] == doctest::Approx(b.truth[k]).epsilon(1e-12));
          CHECK(mo.variance[k] == doctest::Approx(b.var[k]).epsilon(1e-11));
        }
      }
}

TEST_CASE("point estimate on a hand-built trajectory") {
  // N=1, T=3, p=1, design {1,3}. Q=(0.6,0.6,0.4), Z=(1,1,0), Y=(0,5,7).
  const Design d = Design::make(3, {1, 3});
  const AssignmentPolicy pol{d, 0.6, 0.4, 0.5};
  Trajectory tr(1, 3);
  tr.Q = {0.6, 0.6, 0.4};
  tr.z(0, 1) = 1;
  tr.z(0, 2) = 1;
  tr.z(0, 3) = 0;
  tr.y(0, 1) = 0;
  tr.y(0, 2) = 5;
  tr.y(0, 3) = 7;
  const DecisionContext ctx(d, 1);
  const auto est = ht_all(tr, ctx, pol);
  // t=2: window in one block, prob 0.5*0.6 for (q1,1). t=3: window spans two blocks, not constant.
  CHECK(est[0].point == doctest::Approx(0.5 * 5 / (0.5 * 0.6)));
  CHECK(est[2].point == doctest::Approx(0.5 * 5 / (0.5 * 0.6)));
  CHECK(est[1].point == doctest::Approx(0.0));
  CHECK(est[3].point == doctest::Approx(0.0));
}

TEST_CASE("horizon mismatch is reported") {
  const Design d = Design::make(6, {1, 3, 5});
  const AssignmentPolicy pol{d, 0.6, 0.4, 0.5};
  const Trajectory tr(2, 7);
  try {
    ht_all(tr, DecisionContext(d, 1), pol);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("horizon mismatch") != std::string::npos);
  }
}

TEST_CASE("pooled estimate weights centers") {
  EffectEstimate a, b;
  a.point = 1;
  a.variance = 1;
  b.point = 3;
  b.variance = 1;
  const EffectEstimate p = pooled_estimate({a, b}, {0.5, 0.5});
  CHECK(p.point == doctest::Approx(2.0));
  CHECK_THROWS_AS(pooled_estimate({a, b}, {0.5, 0.6}), Error);
  b.id = Estimand::direct_q2;
  CHECK_THROWS_AS(pooled_estimate({a, b}, {0.5, 0.5}), Error);
}
