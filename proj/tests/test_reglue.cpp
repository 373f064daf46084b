#include <gtest/gtest.h>

#include <random>

#include "reglue/reglue.hpp"

using namespace reglue;

TEST(OpenCut, Examples) {
  EXPECT_LT(std::abs(open_cut({1.25}) - cplx(2.0, 0.0)), 1e-15);
  EXPECT_LT(std::abs(open_cut({-1.25}) - cplx(-2.0, 0.0)), 1e-15);
  EXPECT_LT(std::abs(open_cut({0.0, CutSide::Plus}) - cplx(0.0, 1.0)), 1e-15);
  EXPECT_LT(std::abs(open_cut({0.0, CutSide::Minus}) - cplx(0.0, -1.0)), 1e-15);
  EXPECT_EQ(open_cut({1.0}), cplx(1.0, 0.0));
  EXPECT_EQ(open_cut({-1.0}), cplx(-1.0, 0.0));
}

TEST(OpenCut, SideTagRules) {
  EXPECT_THROW(open_cut({0.5}), DomainError);
  EXPECT_THROW(open_cut({cplx(0.5, 0.1), CutSide::Plus}), DomainError);
  EXPECT_THROW(open_cut({2.0, CutSide::Minus}), DomainError);
  EXPECT_NO_THROW(open_cut({1.0, CutSide::Plus}));
}

TEST(OpenCut, InvertsJoukowskiOutsideTheDisk) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> rad(1.001, 10.0), ang(0.0, 2.0 * std::numbers::pi);
  for (int i = 0; i < 1000; ++i) {
    cplx z = std::polar(rad(rng), ang(rng));
    cplx w = 0.5 * (z + 1.0 / z);
    EXPECT_LT(std::abs(open_cut({w}) - z), 1e-11 * std::abs(z)) << z;
  }
}

TEST(OpenCut, ContinuousUpToTheCutFromEachSide) {
  for (double x : {-0.9, -0.3, 0.0, 0.4, 0.95}) {
    for (double eps : {1e-6, 1e-9}) {
      EXPECT_LT(std::abs(open_cut({cplx(x, eps)}) - open_cut({x, CutSide::Plus})), 1e-4);
      EXPECT_LT(std::abs(open_cut({cplx(x, -eps)}) - open_cut({x, CutSide::Minus})), 1e-4);
    }
  }
}

TEST(CloseCut, Examples) {
  auto a = close_cut(2.0);
  EXPECT_LT(std::abs(a.w - cplx(1.25, 0.0)), 1e-15);
  EXPECT_EQ(a.side, CutSide::None);
  auto b = close_cut(cplx(0.0, 1.0));
  EXPECT_LT(std::abs(b.w), 1e-15);
  EXPECT_EQ(b.side, CutSide::Plus);
  EXPECT_EQ(close_cut(cplx(0.0, -1.0)).side, CutSide::Minus);
  EXPECT_EQ(close_cut(1.0).side, CutSide::None);
  try {
    close_cut(0.5);
    FAIL() << "expected an error";
  } catch (const DomainError& e) {
    EXPECT_STREQ(e.what(), "inside the circle");
  }
}

TEST(Reglue, RoundTripOffTheCut) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 1000; ++i) {
    CutPlanePoint p{cplx(u(rng), u(rng))};
    auto q = close_cut(open_cut(p));
    EXPECT_EQ(q.side, CutSide::None);
    EXPECT_LT(std::abs(q.w - p.w), 1e-12 * std::max(1.0, std::abs(p.w))) << p.w;
  }
}

TEST(Reglue, RoundTripOnTheCut) {
  for (int i = 0; i < 100; ++i) {
    double x = -1.0 + 2.0 * (i + 0.5) / 100;
    for (CutSide s : {CutSide::Plus, CutSide::Minus}) {
      auto q = close_cut(open_cut({x, s}));
      EXPECT_EQ(q.side, s);
      EXPECT_LT(std::abs(q.w - cplx(x, 0.0)), 1e-12);
    }
  }
}

TEST(Reglue, EqualRealPartsAcrossTheCut) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 100; ++i) {
    double x = u(rng);
    cplx up = open_cut({x, CutSide::Plus}), down = open_cut({x, CutSide::Minus});
    EXPECT_EQ(up.real(), down.real());
    EXPECT_EQ(up.real(), x);
    EXPECT_EQ(up.imag(), -down.imag());
    EXPECT_NEAR(std::abs(up), 1.0, 1e-15);
  }
}

TEST(Reglue, CauchyRiemannOffTheCut) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> rad(1.1, 5.0), ang(0.0, 2.0 * std::numbers::pi);
  const double h = 1e-6;
  for (int i = 0; i < 100; ++i) {
    cplx w = std::polar(rad(rng), ang(rng));
    cplx fx = (open_cut({w + h}) - open_cut({w - h})) / (2.0 * h);
    cplx fy = (open_cut({w + cplx(0.0, h)}) - open_cut({w - cplx(0.0, h)})) / (2.0 * h);
    EXPECT_LT(std::abs(fy - cplx(0.0, 1.0) * fx), 1e-6) << w;
  }
}

TEST(Reglue, DemoCloudsArePaired) {
  auto pts = reglue_demo(8, 32, 20, 42);
  EXPECT_EQ(pts.size(), 8u * 32u + 40u);
  for (const auto& p : pts) {
    EXPECT_GE(std::abs(p.after), 1.0 - 1e-12);
    EXPECT_LT(std::abs(close_cut(p.after).w - p.before.w), 1e-12 * std::max(1.0, std::abs(p.before.w)));
  }
  auto again = reglue_demo(8, 32, 20, 42);
  ASSERT_EQ(again.size(), pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_EQ(again[i].after, pts[i].after);
}
