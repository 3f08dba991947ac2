#include "doctest.h"

#include <sstream>

#include "mmd/design.hpp"
#include "mmd/error.hpp"
#include "mmd/io.hpp"

using namespace mmd;

namespace {

// governing point by linear scan
int scan_governing(const Design& d, int t) {
  int g = 1;
  for (int x : d.points)
    if (x <= t) g = x;
  return g;
}

// index range of decision points touching [t-p, t], by scan
std::pair<int, int> scan_range(const Design& d, int t, int p) {
  int lo = -1, hi = -1;
  for (int l = 0; l < d.L() + 1; ++l) {
    const int s = d.points[static_cast<size_t>(l)];
    const int e = l + 1 < d.L() + 1 ? d.points[static_cast<size_t>(l) + 1] - 1 : d.T;
    if (e >= t - p && s <= t) {
      if (lo < 0) lo = l;
      hi = l;
    }
  }
  return {lo, hi};
}

}  // namespace

TEST_CASE("design invariants") {
  CHECK_NOTHROW(Design::make(16, {1, 5, 7, 9, 11, 13}));
  CHECK_THROWS_AS(Design::make(16, {2, 5}), Error);
  CHECK_THROWS_AS(Design::make(16, {1, 5, 5}), Error);
  CHECK_THROWS_AS(Design::make(16, {1, 9, 5}), Error);
  CHECK_THROWS_AS(Design::make(16, {1, 17}), Error);
  CHECK_THROWS_AS(Design::make(0, {1}), Error);
  const Design d = Design::make(10, {1, 4});
  CHECK(d.L() == 1);
  CHECK(d.point(2) == 11);
}

TEST_CASE("standard designs for T=16, p=2") {
  CHECK(make_standard_design(StandardKind::star1, 16, 2).points == std::vector<int>{1, 5, 7, 9, 11, 13});
  CHECK(make_standard_design(StandardKind::star2, 16, 2).points == std::vector<int>{1, 6, 9, 12});
  CHECK(make_standard_design(StandardKind::blocked, 16, 2).points == std::vector<int>{1, 4, 7, 10, 13, 16});
  CHECK(make_standard_design(StandardKind::independent, 16, 2).points.size() == 16);
}

TEST_CASE("standard design divisibility failures are infeasible") {
  try {
    make_standard_design(StandardKind::star1, 17, 2);
    FAIL("expected throw");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::infeasible);
    CHECK(e.code() == "divisibility");
  }
  CHECK_THROWS_AS(make_standard_design(StandardKind::star2, 17, 2), Error);
  CHECK_THROWS_AS(parse_standard_kind("zigzag"), Error);
  // p = 0 degenerates to the independent design
  CHECK(make_standard_design(StandardKind::star1, 5, 0).points == std::vector<int>{1, 2, 3, 4, 5});
}

TEST_CASE("governing points and ranges match a linear scan") {
  for (const auto& pts : std::vector<std::vector<int>>{{1, 5, 7, 9, 11, 13}, {1, 6, 9, 12}, {1, 2, 3, 8}, {1}}) {
    const Design d = Design::make(16, pts);
    for (int p : {0, 1, 2, 3}) {
      const DecisionContext ctx(d, p);
      for (int t = 1; t <= 16; ++t) CHECK(ctx.governing(t) == scan_governing(d, t));
      for (int t = p + 1; t <= 16; ++t) {
        CHECK(ctx.governing_range(t) == scan_range(d, t, p));
        const int J = ctx.exposure_count(t);
        CHECK(J >= 1);
        CHECK(J <= p + 1);
        CHECK(ctx.overlap_count(t, t) == J);
        for (int s = p + 1; s <= 16; ++s) CHECK(ctx.overlap_count(t, s) <= std::min(J, ctx.exposure_count(s)));
      }
    }
  }
}

TEST_CASE("J histogram equals a direct double count") {
  for (const auto& pts : std::vector<std::vector<int>>{{1, 5, 7, 9, 11, 13}, {1, 6, 9, 12}, {1, 3, 4, 10}}) {
    const Design d = Design::make(16, pts);
    for (int p : {1, 2}) {
      const DecisionContext ctx(d, p);
      std::vector<long long> c(static_cast<size_t>(p) + 2, 0);
      for (int t = p + 1; t <= 16; ++t)
        for (int s = p + 1; s <= 16; ++s) {
          auto [a1, b1] = scan_range(d, t, p);
          auto [a2, b2] = scan_range(d, s, p);
          const int o = std::min(b1, b2) - std::max(a1, a2) + 1;
          if (o > 0) c[static_cast<size_t>(o)] += 1;
        }
      const JHistogram h = j_histogram(ctx);
      for (int j = 1; j <= p + 1; ++j) CHECK(h.at(j) == c[static_cast<size_t>(j)]);
    }
  }
}

TEST_CASE("context rejects bad orders and times") {
  const Design d = Design::make(4, {1, 3});
  CHECK_THROWS_AS(DecisionContext(d, 4), Error);
  const DecisionContext ctx(d, 1);
  CHECK_THROWS_AS(ctx.governing_range(1), Error);
  CHECK_THROWS_AS(ctx.governing(5), Error);
}

TEST_CASE("candidate feasibility") {
  CHECK(validate_candidate(Design::make(16, {1, 6, 9, 12}), 2));
  CHECK_FALSE(validate_candidate(Design::make(16, {1, 3, 9, 12}), 2));   // first gap too short
  CHECK_FALSE(validate_candidate(Design::make(16, {1, 6, 9, 15}), 2));   // last point too late
  CHECK_FALSE(validate_candidate(Design::make(16, {1}), 2));
}

TEST_CASE("design JSON round trip and field-specific errors") {
  const Design d = Design::make(16, {1, 5, 7, 9, 11, 13});
  CHECK(design_from_json(design_to_json(d)) == d);
  auto msg = [](const char* text) {
    try {
      design_from_json(json::parse(text));
    } catch (const Error& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(msg(R"({"decision_points":[1,2]})").find("'T'") != std::string::npos);
  CHECK(msg(R"({"T":4})").find("decision_points") != std::string::npos);
  CHECK(msg(R"({"T":4,"decision_points":[1,"x"]})").find("decision_points") != std::string::npos);
  CHECK(msg(R"({"T":4,"decision_points":[2,3]})").find("decision_points") != std::string::npos);
  CHECK(msg(R"({"T":4,"decision_points":[1,3,3]})").find("decision_points") != std::string::npos);
}
