#include <gtest/gtest.h>

#include <cmath>

#include "reglue/rays.hpp"

using namespace reglue;

namespace {

constexpr double kLandPotential = 1.0 - 1.0 / 4096.0;

BoettcherData external(cplx c) { return boettcher(family_member(1, c).map, SpherePoint::infinity(), 1); }

// Parameter on the real axis where v = -a leaves the capture component of a = 2.
double capture_boundary() {
  auto in_component = [](double a) {
    auto fm = family_member(2, a);
    return descend(RayFrame{marked_boettcher(fm), 1}, free_critical_value(fm.map)).has_value();
  };
  double inside = 2.0, outside = 1.6;
  for (int i = 0; i < 50; ++i) {
    double mid = 0.5 * (inside + outside);
    (in_component(mid) ? inside : outside) = mid;
  }
  return outside;
}

}  // namespace

TEST(Boettcher, SquareIsIdentity) {
  auto bd = external(0.0);
  EXPECT_NEAR(std::abs(bd.lambda - 1.0), 0.0, 1e-14);
  EXPECT_LT(boettcher_residual(bd), 1e-12);
  auto phi = boettcher_phi(bd, SpherePoint(cplx(4.0, 3.0)));
  ASSERT_TRUE(phi);
  // Local coordinate at infinity is 1/z and phi is the identity there.
  EXPECT_LT(std::abs(*phi - 1.0 / cplx(4.0, 3.0)), 1e-14);
}

TEST(Boettcher, LeadingCoefficients) {
  // z^2 - 1 at 0 under f^2: z^4 - 2 z^2, so lambda = -2.
  auto basilica = boettcher(family_member(1, -1.0).map, SpherePoint(0.0), 2);
  EXPECT_LT(std::abs(basilica.lambda - cplx(-2.0, 0.0)), 1e-12);
  EXPECT_LT(boettcher_residual(basilica), 1e-10);
  // a/(z^2+2z) at infinity: f(z) ~ a/z^2 and f(w) ~ a/(2w), so f^2(z) ~ z^2/2.
  for (cplx a : {cplx(2.0, 0.0), cplx(0.7, 1.3)}) {
    auto fm = family_member(2, a);
    auto bd = marked_boettcher(fm);
    EXPECT_LT(std::abs(bd.lambda - cplx(2.0, 0.0)), 1e-12) << a;
    EXPECT_LT(boettcher_residual(bd), 1e-10) << a;
  }
}

TEST(Boettcher, Rejections) {
  const auto sq = family_member(1, 0.0).map;
  EXPECT_THROW(boettcher(sq, SpherePoint(0.5), 1), DomainError);
  EXPECT_THROW(boettcher(sq, SpherePoint(1.0), 1), DomainError);
  EXPECT_THROW(boettcher(sq, SpherePoint(0.0), 2), DomainError);
}

TEST(Rays, SquareRayZeroIsPositiveAxis) {
  auto ray = trace_ray(external(0.0), 0.0, 0.1, kLandPotential);
  ASSERT_GT(ray.points.size(), 10u);
  for (const auto& p : ray.points) {
    ASSERT_FALSE(p.z.is_infinity());
    EXPECT_LT(std::abs(p.z.value().imag()), 1e-8);
    EXPECT_GT(p.z.value().real(), 0.0);
    // |z| = 1/t on the external rays of z^2.
    EXPECT_NEAR(std::abs(p.z.value()), 1.0 / p.potential, 1e-9 / p.potential);
  }
  ASSERT_TRUE(ray.landing);
  EXPECT_LT(chordal_distance(*ray.landing, 1.0), 1e-6);
}

TEST(Rays, SquareRayHalfIsNegativeAxis) {
  auto ray = trace_ray(external(0.0), 0.5, 0.1, kLandPotential);
  for (const auto& p : ray.points) {
    EXPECT_LT(std::abs(p.z.value().imag()), 1e-8);
    EXPECT_LT(p.z.value().real(), 0.0);
  }
  ASSERT_TRUE(ray.landing);
  EXPECT_LT(chordal_distance(*ray.landing, -1.0), 1e-6);
}

TEST(Rays, RealParameterRayZeroStaysReal) {
  for (double c : {-1.5, -1.0, -0.3, 0.2}) {
    auto ray = trace_ray(external(c), 0.0, 0.05, kLandPotential);
    double dev = 0.0;
    for (const auto& p : ray.points) dev = std::max(dev, std::abs(p.z.value().imag()));
    EXPECT_LT(dev, 1e-8) << c;
    // Ray 0 lands at the fixed point (1 + sqrt(1 - 4c)) / 2.
    ASSERT_TRUE(ray.landing) << c;
    EXPECT_LT(chordal_distance(*ray.landing, 0.5 * (1.0 + std::sqrt(1.0 - 4.0 * c))), 1e-4) << c;
  }
}

TEST(Rays, BasilicaInternalRayLandsAtAlpha) {
  auto bd = boettcher(family_member(1, -1.0).map, SpherePoint(0.0), 2);
  auto ray = trace_ray(bd, 0.0, 0.1, kLandPotential);
  EXPECT_LT(ray_residual(RayFrame{bd, 0}, ray), 1e-6);
  ASSERT_TRUE(ray.landing);
  EXPECT_LT(chordal_distance(*ray.landing, 0.5 * (1.0 - std::sqrt(5.0))), 1e-4);
}

TEST(Rays, ResidualAlongTraces) {
  struct Case {
    BoettcherData bd;
    double angle;
  };
  std::vector<Case> cases{{external(0.0), 0.3},
                          {external(cplx(0.0, 1.0)), 1.0 / 6.0},
                          {external(cplx(-0.12, 0.75)), 1.0 / 7.0},
                          {boettcher(family_member(1, -1.0).map, SpherePoint(0.0), 2), 0.25},
                          {marked_boettcher(family_member(2, cplx(2.0, 0.1))), 0.4}};
  for (const auto& c : cases) {
    auto ray = trace_ray(c.bd, c.angle, 0.1, 0.97);
    EXPECT_FALSE(ray.landing);
    EXPECT_LT(ray_residual(RayFrame{c.bd, 0}, ray), 1e-6) << c.angle;
    EXPECT_LE(max_edge_length(ray.trace.vertices), kDefaultMaxEdge * (1 + 1e-12));
  }
}

TEST(Rays, AngleDoublesUnderTheFirstReturnMap) {
  struct Case {
    QuadraticRationalMap map;
    BoettcherData bd;
    double angle;
  };
  const auto rabbitish = family_member(1, cplx(-0.12, 0.75)).map;
  const auto basilica = family_member(1, -1.0).map;
  std::vector<Case> cases{{rabbitish, boettcher(rabbitish, SpherePoint::infinity(), 1), 0.1},
                          {basilica, boettcher(basilica, SpherePoint(0.0), 2), 0.3}};
  for (const auto& c : cases) {
    auto ray = trace_ray(c.bd, c.angle, 0.3, 0.9, 0.1);
    double worst = 0.0;
    for (std::size_t i = 0; i < ray.points.size(); i += 7) {
      const auto& p = ray.points[i];
      SpherePoint image = p.z;
      for (int s = 0; s < c.bd.k; ++s) image = c.map(image);
      // The image lies on the doubled ray at the squared potential.
      auto doubled = trace_ray(c.bd, 2.0 * c.angle, 0.05, p.potential * p.potential);
      worst = std::max(worst, chordal_distance(image, doubled.points.back().z));
    }
    EXPECT_LT(worst, 1e-5) << c.angle;
  }
}

TEST(Rays, InvalidPotentials) {
  auto bd = external(0.0);
  EXPECT_THROW(trace_ray(bd, 0.0, 0.5, 0.4), DomainError);
  EXPECT_THROW(trace_ray(bd, 0.0, 0.0, 0.4), DomainError);
  EXPECT_THROW(trace_ray(bd, 0.0, 0.1, 1.0), DomainError);
}

TEST(Beta, ChebyshevEndpoint) {
  auto fm = family_member(1, -2.0);
  auto r = beta_boundary_case(fm);
  EXPECT_NEAR(r.angle, 0.5, 1e-6);
  ASSERT_TRUE(r.landing);
  EXPECT_LT(chordal_distance(*r.landing, -2.0), 1e-4);
  EXPECT_TRUE(r.curve.start_tag == "preperiodic point w");
  EXPECT_TRUE(r.curve.vertices.front().is_infinity());
  auto from_v = beta_from_v(r, free_critical_value(fm.map));
  EXPECT_EQ(from_v.start_tag, "critical value");
  EXPECT_LT(chordal_distance(from_v.vertices.front(), -2.0), 1e-15);
  EXPECT_TRUE(from_v.vertices.back().is_infinity());
}

TEST(Beta, DendriteTip) {
  // c = i is the landing point of the external ray 1/6.
  auto fm = family_member(1, cplx(0.0, 1.0));
  auto r = beta_boundary_case(fm);
  EXPECT_NEAR(r.angle, 1.0 / 6.0, 1e-3);
  ASSERT_TRUE(r.landing);
  EXPECT_LT(chordal_distance(*r.landing, cplx(0.0, 1.0)), 1e-4);
  EXPECT_LT(ray_residual(RayFrame{marked_boettcher(fm), r.preperiod}, r.ray), 1e-6);
}

TEST(Beta, ExplicitAngle) {
  auto fm = family_member(1, -2.0);
  auto r = beta_boundary_case(fm, 0.5);
  EXPECT_DOUBLE_EQ(r.angle, 0.5);
  ASSERT_TRUE(r.landing);
  EXPECT_LT(r.landing_distance, 1e-6);
}

TEST(Beta, NearCaptureBoundary) {
  const double a = capture_boundary() - 1e-6;
  auto fm = family_member(2, a);
  auto r = beta_boundary_case(fm);
  EXPECT_EQ(r.preperiod, 1);
  ASSERT_TRUE(r.landing);
  EXPECT_LT(chordal_distance(*r.landing, -a), 1e-3);
  // The far end is the preimage -2 of infinity, the center of the component.
  EXPECT_LT(chordal_distance(r.center, -2.0), 1e-9);
  EXPECT_LT(ray_residual(RayFrame{marked_boettcher(fm), r.preperiod}, r.ray), 1e-6);
}

TEST(Beta, InteriorParametersAreRejected) {
  EXPECT_THROW(beta_boundary_case(family_member(1, 3.0)), DomainError);
  EXPECT_THROW(beta_boundary_case(family_member(2, 2.0)), DomainError);
  EXPECT_THROW(beta_boundary_case(family_member(1, -1.0)), DomainError);
}

TEST(Beta, CaptureCaseRunsFromVToCenter) {
  const cplx a(2.0, 0.1);
  auto fm = family_member(2, a);
  auto r = beta_capture_case(fm);
  EXPECT_EQ(r.preperiod, 1);
  EXPECT_EQ(r.curve.start_tag, "critical value");
  EXPECT_LT(chordal_distance(r.curve.vertices.front(), -a), 1e-15);
  // f(w) = infinity forces w^2 + 2w = 0; w = 0 is the cycle point itself.
  EXPECT_LT(chordal_distance(r.curve.vertices.back(), -2.0), 1e-9);
  EXPECT_TRUE(r.curve.simple());
  EXPECT_THROW(beta_capture_case(family_member(1, -2.0)), DomainError);
}
