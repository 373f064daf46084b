#include <gtest/gtest.h>

#include "oracles.hpp"
#include "reglue/classify.hpp"
#include "reglue/spider.hpp"

using namespace reglue;

namespace {

// Root of the oracle polynomial nearest to `near`.
cplx nearest_root(const std::vector<cplx>& roots, cplx near) {
  cplx best = roots.front();
  for (cplx r : roots)
    if (std::abs(r - near) < std::abs(best - near)) best = r;
  return best;
}

cplx orbit_point(cplx c, int n) {
  cplx z = 0.0;
  for (int i = 0; i < n; ++i) z = z * z + c;
  return z;
}

}  // namespace

TEST(Portrait, DoublingOrbits) {
  auto a = angle_to_portrait(1, 3);
  EXPECT_EQ(a.orbit, (std::vector<std::int64_t>{1, 2}));
  EXPECT_EQ(a.preperiod, 0);
  EXPECT_EQ(a.period, 2);
  auto b = angle_to_portrait(1, 7);
  EXPECT_EQ(b.orbit, (std::vector<std::int64_t>{1, 2, 4}));
  EXPECT_EQ(b.period, 3);
  auto c = angle_to_portrait(1, 6);
  EXPECT_EQ(c.orbit, (std::vector<std::int64_t>{1, 2, 4}));
  EXPECT_EQ(c.preperiod, 1);
  EXPECT_EQ(c.period, 2);
  EXPECT_EQ(c.successor(2), 1);
  auto z = angle_to_portrait(0, 1);
  EXPECT_EQ(z.marked_count(), 1);
  EXPECT_THROW(angle_to_portrait(2, 4), DomainError);
  EXPECT_THROW(angle_to_portrait(3, 3), DomainError);
}

TEST(SpiderStep, BasilicaIsAFixedPoint) {
  auto pt = angle_to_portrait(1, 3);
  auto s = spider_start(pt, -1.0);
  ASSERT_TRUE(legs_disjoint(s));
  auto n = spider_step(pt, s);
  EXPECT_LT(std::abs(n.c - cplx(-1.0, 0.0)), 1e-9);
  EXPECT_EQ(n.points[0], n.c);
}

TEST(SpiderStep, MovesAwayFromZero) {
  auto pt = angle_to_portrait(1, 3);
  auto s = spider_start(pt, 0.0);
  auto n = spider_step(pt, s);
  EXPECT_GT(std::abs(n.c - s.c), 0.1);
}

TEST(SpiderStep, FixedCriticalPoint) {
  auto pt = angle_to_portrait(0, 1);
  auto n = spider_step(pt, spider_start(pt, 0.0));
  EXPECT_EQ(n.c, cplx(0.0, 0.0));
}

TEST(SpiderStep, PinchingIsReported) {
  auto pt = angle_to_portrait(1, 6);
  auto s = spider_start(pt);
  // Put x_1 onto the critical value: its lift is the doubled critical point.
  s.points[1] = s.c;
  s.legs[1] = detail::make_leg(detail::radial_tail(s.c, pt.angle(1), 1e4));
  try {
    spider_step(pt, s);
    FAIL() << "expected pinching";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("pinching"), std::string::npos);
  }
}

TEST(SpiderSolve, PeriodicCentersMatchOracle) {
  struct Case {
    int p, q, period;
    cplx expected;
  };
  for (const auto& cs : {Case{1, 3, 2, cplx(-1.0, 0.0)}, Case{1, 7, 3, cplx(-0.122561, 0.744862)},
                         Case{3, 7, 3, cplx(-1.754878, 0.0)}}) {
    auto res = spider_solve(angle_to_portrait(cs.p, cs.q), 1e-13, 1000);
    cplx root = nearest_root(oracle::exact_period_centers(cs.period), cs.expected);
    EXPECT_LT(std::abs(root - cs.expected), 1e-6);
    EXPECT_LT(std::abs(res.c - root), 1e-8) << cs.p << "/" << cs.q;
    EXPECT_LT(std::abs(res.c - find_center(1, cs.period, res.c)), 1e-8);
    EXPECT_LT(std::abs(orbit_point(res.c, cs.period)), 1e-8);
  }
}

TEST(SpiderSolve, PreperiodicAngleGivesMisiurewiczPoint) {
  auto res = spider_solve(angle_to_portrait(1, 6), 1e-13, 1000);
  EXPECT_LT(std::abs(res.c - cplx(0.0, 1.0)), 1e-8);
  EXPECT_LT(std::abs(res.c - find_preperiodic_center(1, 2, res.c)), 1e-8);
  // 0 -> c -> c^2 + c -> ... returns to f(c) after two more steps.
  EXPECT_LT(std::abs(orbit_point(res.c, 4) - orbit_point(res.c, 2)), 1e-8);
}

TEST(SpiderSolve, ConvergenceIsGeometric) {
  for (auto [p, q] : {std::pair{1, 3}, std::pair{1, 7}, std::pair{3, 7}, std::pair{1, 6}}) {
    auto res = spider_solve(angle_to_portrait(p, q), 1e-13, 1000);
    const auto& h = res.history;
    ASSERT_GT(h.size(), 11u);
    for (std::size_t i = h.size() - 10; i < h.size(); ++i) EXPECT_LT(h[i].delta / h[i - 1].delta, 0.95);
  }
}

TEST(SpiderSolve, FinalSpiderIsConsistent) {
  auto pt = angle_to_portrait(1, 7);
  auto res = spider_solve(pt, 1e-13, 1000);
  EXPECT_TRUE(legs_disjoint(res.state));
  EXPECT_EQ(res.state.points[0], res.c);
  for (int i = 1; i < pt.marked_count(); ++i)
    EXPECT_LT(std::abs(res.state.points[i] - orbit_point(res.c, i + 1)), 1e-8);
}

TEST(SpiderSolve, IterationLimit) {
  try {
    spider_solve(angle_to_portrait(1, 7), 1e-13, 5);
    FAIL() << "expected divergence report";
  } catch (const SpiderDivergence& e) {
    EXPECT_EQ(e.history().size(), 5u);
  }
  EXPECT_THROW(spider_solve(angle_to_portrait(1, 3), 0.0, 5), DomainError);
}
