#include "doctest.h"

#include <cmath>
#include <sstream>

#include "mmd/cells.hpp"
#include "mmd/engine.hpp"
#include "mmd/error.hpp"
#include "mmd/io.hpp"

using namespace mmd;

TEST_CASE("assignments are constant between decision points") {
  const Design d = Design::make(20, {1, 4, 9, 15});
  const AssignmentPolicy pol{d, 0.6, 0.4, 0.5};
  const Trajectory tr = draw_assignment(pol, 7, 123);
  for (int t = 2; t <= 20; ++t) {
    const bool boundary = t == 4 || t == 9 || t == 15;
    if (boundary) continue;
    CHECK(tr.q(t) == tr.q(t - 1));
    for (int i = 0; i < 7; ++i) CHECK(tr.z(i, t) == tr.z(i, t - 1));
  }
  for (int t = 1; t <= 20; ++t) CHECK((tr.q(t) == 0.6 || tr.q(t) == 0.4));
}

TEST_CASE("assignment frequencies follow r and q") {
  const Design d = make_standard_design(StandardKind::independent, 4000, 0);
  const AssignmentPolicy pol{d, 0.7, 0.2, 0.3};
  const Trajectory tr = draw_assignment(pol, 5, 99);
  double n1 = 0, z1 = 0, z2 = 0, c1 = 0, c2 = 0;
  for (int t = 1; t <= 4000; ++t) {
    const bool hi = tr.q(t) == 0.7;
    n1 += hi;
    for (int i = 0; i < 5; ++i) {
      if (hi) { z1 += tr.z(i, t); c1 += 1; }
      else { z2 += tr.z(i, t); c2 += 1; }
    }
  }
  // 5 binomial SEs
  CHECK(std::abs(n1 / 4000 - 0.3) < 5 * std::sqrt(0.21 / 4000));
  CHECK(std::abs(z1 / c1 - 0.7) < 5 * std::sqrt(0.21 / c1));
  CHECK(std::abs(z2 / c2 - 0.2) < 5 * std::sqrt(0.16 / c2));
}

TEST_CASE("seeded draws are reproducible") {
  const Design d = Design::make(12, {1, 5, 9});
  const AssignmentPolicy pol{d, 0.6, 0.4, 0.5};
  const Model2 m(Model2Spec{}, 3, 12, 0.6, 5);
  const Trajectory a = run_trial(pol, m, 3, 42), b = run_trial(pol, m, 3, 42), c = run_trial(pol, m, 3, 43);
  CHECK(a.Y == b.Y);
  CHECK(a.Z == b.Z);
  CHECK((a.Y != c.Y || a.Z != c.Z));
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
}

TEST_CASE("model 1 outcomes") {
  const Model1 m(2.0);
  const std::vector<double> q{0.6};
  const std::vector<std::uint8_t> z1{1}, z0{0};
  CHECK(m.eval(0, 1, q, z1) == 2.0);
  CHECK(m.eval(0, 1, q, z0) == -2.0);
}

TEST_CASE("model 2 effects are (6,3,6,3) with unit coefficients") {
  const Model2 m(Model2Spec{}, 4, 30, 0.6, 11);
  const CellTable cells = potential_cells(m, 4, 30, 0.6, 0.4);
  const auto tau = cell_estimands(cells, 2);
  CHECK(tau[0] == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(tau[1] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(tau[2] == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(tau[3] == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("model 2 constant path at t=8 without noise") {
  // indicator form: each lag adds dq 1{q=q1} + dz z + dqz 1{q=q1} z
  Model2Spec s = Model2Spec::with_order(2, 1.0);
  s.noise_sd = 0;
  const Model2 m(s, 1, 8, 0.6, 0);
  const std::vector<double> q(3, 0.6), q2(3, 0.4);
  const std::vector<std::uint8_t> z(3, 1), z0(3, 0);
  CHECK(m.eval(0, 8, q, z) == doctest::Approx(std::log(8.0) + 9));
  CHECK(m.eval(0, 8, q2, z) == doctest::Approx(std::log(8.0) + 3));
  CHECK(m.eval(0, 8, q2, z0) == doctest::Approx(std::log(8.0)));
  Model2Spec bad = s;
  bad.delta_q = {1, 1};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("trajectory CSV round trip") {
  const Design d = Design::make(6, {1, 3});
  const AssignmentPolicy pol{d, 0.6, 0.4, 0.5};
  const Model2 m(Model2Spec{}, 3, 6, 0.6, 8);
  const Trajectory tr = run_trial(pol, m, 3, 9);
  std::stringstream ss;
  write_trajectory_csv(ss, tr);
  const Trajectory back = read_trajectory_csv(ss);
  CHECK(back.N == 3);
  CHECK(back.T == 6);
  CHECK(back.Q == tr.Q);
  CHECK(back.Z == tr.Z);
  CHECK(back.Y == tr.Y);
}

TEST_CASE("trajectory CSV validation") {
  auto bad = [](const std::string& text) {
    std::stringstream ss(text);
    CHECK_THROWS_AS(read_trajectory_csv(ss), Error);
  };
  bad("");
  bad("unit,time,q,z\n1,1,0.6,1\n");
  bad("unit,time,q,z,y\n1,1,0.6,2,0\n");
  bad("unit,time,q,z,y\n1,1,0.6,1,0\n1,1,0.6,1,0\n");
  bad("unit,time,q,z,y\n1,1,0.6,1,0\n2,1,0.4,1,0\n");
  bad("unit,time,q,z,y\n1,1,0.6,1,0\n1,2,0.6,1,0\n2,1,0.6,1,0\n");
  bad("unit,time,q,z,y\n1,1,abc,1,0\n");
}

TEST_CASE("multicenter runs: first center uses the master seed") {
  const Design d = Design::make(10, {1, 4, 7});
  const AssignmentPolicy pol{d, 0.6, 0.4, 0.5};
  auto m = std::make_shared<Model1>(1.0);
  std::vector<CenterSpec> specs{{"a", 3, pol, m}, {"b", 5, pol, m}};
  const auto trs = run_multicenter(specs, 77);
  CHECK(trs.size() == 2);
  CHECK(trs[0].Z == run_trial(pol, *m, 3, 77).Z);
  const auto w = center_weights(specs);
  CHECK(w[0] == doctest::Approx(3.0 / 8));
  CHECK(w[1] == doctest::Approx(5.0 / 8));
}
