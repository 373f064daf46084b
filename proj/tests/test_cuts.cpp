#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "reglue/cuts.hpp"

using namespace reglue;

namespace {

const QuadraticRationalMap kSquare = family_member(1, 0.0).map;

std::vector<SpherePoint> line(cplx a, cplx b, int n = 64) {
  std::vector<SpherePoint> v;
  for (int i = 0; i <= n; ++i) v.emplace_back(a + (b - a) * (static_cast<double>(i) / n));
  return v;
}

double max_reprojection(const CutFamily& cf) {
  double e = 0.0;
  for (int n = 1; n <= cf.depth(); ++n)
    for (const auto& a : cf.levels[n])
      e = std::max(e, reprojection_error(cf.map, a.curve, cf.pieces[n - 1][a.parent][a.parent_piece]));
  return e;
}

}  // namespace

TEST(Geometry, SegmentIntersection) {
  auto r = segment_intersection(cplx(-1, 0), cplx(1, 0), cplx(0, -1), cplx(0, 1));
  ASSERT_TRUE(r);
  EXPECT_LT(chordal_distance(*r, 0.0), 1e-15);
  EXPECT_FALSE(segment_intersection(cplx(0, 0), cplx(1, 0), cplx(0, 1), cplx(1, 1)));
  EXPECT_TRUE(segment_intersection(cplx(0, 0), cplx(1, 0), cplx(1, 0), cplx(2, 1)));
  EXPECT_TRUE(is_simple(line(0.0, 1.0)));
  EXPECT_FALSE(is_simple({cplx(0, 0), cplx(1, 0), cplx(1, 1), cplx(0.5, -1)}));
  std::vector<SpherePoint> sq{cplx(0, 0), cplx(1, 0), cplx(1, 1), cplx(0, 1), cplx(0, 0)};
  EXPECT_TRUE(is_simple(sq));
}

TEST(Geometry, RefinementBoundsEdges) {
  auto v = refine_polyline({SpherePoint(0.0), SpherePoint(cplx(50.0, 3.0)), SpherePoint::infinity()}, 0.01);
  EXPECT_LE(max_edge_length(v), 0.01);
  EXPECT_TRUE(v.back().is_infinity());
}

TEST(Pullback, SquareOfGenericSegment) {
  auto parts = pullback_curve(kSquare, make_segment(1.0, 4.0));
  ASSERT_EQ(parts.size(), 2u);
  std::vector<std::vector<SpherePoint>> expect{line(-2.0, -1.0), line(1.0, 2.0)};
  for (const auto& c : parts) {
    double h = std::min(polyline_hausdorff(c.vertices, expect[0]), polyline_hausdorff(c.vertices, expect[1]));
    EXPECT_LT(h, 1e-12);
    EXPECT_LT(reprojection_error(kSquare, c, make_segment(1.0, 4.0)), 1e-9);
  }
}

TEST(Pullback, CriticalValueEndpointMerges) {
  auto parts = pullback_curve(kSquare, make_segment(0.0, 1.0));
  ASSERT_EQ(parts.size(), 1u);
  EXPECT_LT(polyline_hausdorff(parts[0].vertices, line(-1.0, 1.0)), 1e-12);
  EXPECT_TRUE(parts[0].simple());
  EXPECT_LE(max_edge_length(parts[0].vertices), kDefaultMaxEdge);
}

TEST(Pullback, Per2TinyArcHasTwoLifts) {
  auto fm = family_member(2, 2.0);
  cplx w(0.7, 0.4);
  Curve gamma = make_segment(w, w + cplx(1e-3, 5e-4), 1e-4);
  auto parts = pullback_curve(fm.map, gamma);
  ASSERT_EQ(parts.size(), 2u);
  for (const auto& c : parts) EXPECT_LT(reprojection_error(fm.map, c, gamma), 1e-9);
  // Closed form -1 +- sqrt(1 + a/w).
  cplx r = std::sqrt(1.0 + 2.0 / w);
  double d0 = std::min(chordal_distance(parts[0].vertices.front(), -1.0 + r),
                       chordal_distance(parts[0].vertices.front(), -1.0 - r));
  EXPECT_LT(d0, 1e-12);
}

TEST(Pullback, InteriorCriticalValueRejected) {
  EXPECT_THROW(pullback_curve(kSquare, make_segment(-1.0, 1.0)), DomainError);
  try {
    pullback_curve(kSquare, make_segment(-1.0, 1.0));
  } catch (const DomainError& e) {
    EXPECT_NE(std::string(e.what()).find("subdivide: interior critical value"), std::string::npos);
  }
}

TEST(Pullback, ComponentCountMatchesBruteForce) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int agree = 0;
  for (int trial = 0; trial < 100; ++trial) {
    int k = 1 + trial % 2;
    cplx param(1.5 * u(rng), 1.5 * u(rng));
    if (k == 2 && std::abs(param) < 0.2) param += 0.5;
    auto fm = family_member(k, param);
    bool critical = trial % 4 < 2;
    cplx start;
    if (critical) {
      start = free_critical_value(fm.map).value();
    } else {
      do {
        start = cplx(2.0 * u(rng), 2.0 * u(rng));
      } while (distance_to_polyline(start, {free_critical_value(fm.map)}) < 0.2 ||
               distance_to_polyline(start, {fm.map(fm.map.c1())}) < 0.2);
    }
    cplx dir = std::polar(0.05, 3.2 * u(rng));
    Curve arc = make_segment(start, start + dir, 0.002);
    auto lifted = pullback_curve(fm.map, arc);
    std::vector<cplx> samples;
    // Quadratic spacing resolves the square-root speed-up at a critical value.
    for (int i = 0; i <= 4000; ++i) samples.push_back(start + dir * std::pow(i / 4000.0, 2));
    const auto& N = fm.map.numerator().c;
    const auto& D = fm.map.denominator().c;
    int oracle_count = oracle::preimage_component_count(N.data(), D.data(), samples, 2e-3);
    if (static_cast<int>(lifted.size()) == oracle_count && oracle_count == (critical ? 1 : 2)) ++agree;
    else ADD_FAILURE() << trial << " lifted " << lifted.size() << " oracle " << oracle_count;
  }
  EXPECT_EQ(agree, 100);
}

TEST(InitialCut, SquareBetaFromZero) {
  Curve beta = make_segment(0.0, 1.0, 0.01);
  Curve z = initial_cut(kSquare, beta);
  EXPECT_LT(polyline_hausdorff(z.vertices, line(-1.0, 1.0)), 1e-12);
  auto rep = two_to_one_check(kSquare, z, beta, 200);
  EXPECT_TRUE(rep.passed);
  EXPECT_LT(rep.max_reprojection_error, 1e-9);
}

TEST(InitialCut, RejectsBetaAwayFromCriticalValue) {
  EXPECT_THROW(initial_cut(kSquare, make_segment(1.0, 4.0)), DomainError);
}

TEST(InitialCut, Per2CapturePerturbation) {
  cplx a(2.0, 0.1);
  auto fm = family_member(2, a);
  Curve beta = make_segment(-a, -a + cplx(0.3, 0.2), 0.005);
  Curve z = initial_cut(fm.map, beta);
  EXPECT_TRUE(z.simple());
  auto rep = two_to_one_check(fm.map, z, beta, 200);
  EXPECT_TRUE(rep.passed) << rep.max_preimage_offset << " " << rep.max_reprojection_error;
}

TEST(CutFamily, SquareDepthOneAndTwo) {
  Curve z = make_segment(-1.0, 1.0, 0.01);
  auto cf0 = build_cut_family(kSquare, z, 0);
  EXPECT_EQ(cf0.levels.size(), 1u);

  auto cf = build_cut_family(kSquare, z, 2);
  ASSERT_EQ(cf.levels[1].size(), 2u);
  std::vector<std::vector<SpherePoint>> lvl1{line(-1.0, 1.0), line(cplx(0, -1), cplx(0, 1))};
  for (const auto& a : cf.levels[1]) {
    double h = std::min(polyline_hausdorff(a.curve.vertices, lvl1[0]), polyline_hausdorff(a.curve.vertices, lvl1[1]));
    EXPECT_LT(h, 1e-8);
  }
  ASSERT_EQ(cf.levels[2].size(), 4u);
  for (const auto& a : cf.levels[2]) {
    double best = 1.0;
    for (int j = 0; j < 4; ++j) {
      cplx e = std::polar(1.0, j * M_PI / 4);
      best = std::min(best, polyline_hausdorff(a.curve.vertices, line(-e, e)));
    }
    EXPECT_LT(best, 1e-8);
  }
  EXPECT_LT(max_reprojection(cf), 1e-9);
}

TEST(CutComplex, PlusSignIntersectsOnce) {
  auto cf = build_cut_family(kSquare, make_segment(-1.0, 1.0, 0.01), 1);
  auto cx = build_cut_complex(cf);
  ASSERT_EQ(cx.levels.size(), 2u);
  EXPECT_EQ(cx.levels[1].arc_count, 2);
  EXPECT_EQ(cx.levels[1].intersection_count, 1);
  EXPECT_FALSE(cx.disjoint);

  auto c0 = build_cut_complex(build_cut_family(kSquare, make_segment(-1.0, 1.0, 0.01), 0));
  EXPECT_EQ(c0.arcs.size(), 1u);
  EXPECT_TRUE(c0.arcs[0].transitions.empty());
}

TEST(CutComplex, HalvesThroughCriticalPointHaveOppositeTransitions) {
  auto cf = build_cut_family(kSquare, make_segment(-1.0, 1.0, 0.01), 1);
  auto cx = build_cut_complex(cf);
  for (const auto& a : cx.arcs) {
    if (a.level != 1) continue;
    ASSERT_EQ(a.transitions.size(), 2u);
    EXPECT_NE(a.transitions[0].plus_to, a.transitions[1].plus_to);
  }
}

TEST(CutComplex, SideTransitionsComposeLikeTheSecondIterate) {
  auto fm = family_member(2, cplx(2.0, 0.1));
  cplx a = fm.parameter;
  Curve z = initial_cut(fm.map, make_segment(-a, -a + cplx(0.3, 0.2), 0.005));
  auto cf = build_cut_family(fm.map, z, 2);
  auto cx = build_cut_complex(cf);
  auto arc_of = [&](int level, int index) -> const ComplexArc& {
    for (const auto& x : cx.arcs)
      if (x.level == level && x.index == index) return x;
    throw std::runtime_error("missing arc");
  };
  QuadraticRationalMap m = fm.map;
  int checked = 0;
  for (int i = 0; i < static_cast<int>(cf.levels[2].size()); ++i) {
    const auto& child = cf.levels[2][i];
    const auto& v = child.curve.vertices;
    std::size_t j = v.size() / 3;
    const auto& ca = arc_of(2, i);
    SpherePoint p = segment_point(v[j], v[j + 1], 0.5);
    SpherePoint fp = m(p);
    // Locate the parent vertex hit by f(p) to read the parent's own transition.
    const auto& parent_arc = cf.levels[1][child.parent];
    auto [pseg, pd] = nearest_segment(fp, parent_arc.curve.vertices);
    ASSERT_LT(pd, 1e-4);
    Side via = transition_at(arc_of(1, child.parent), static_cast<int>(pseg),
                             transition_at(ca, static_cast<int>(j), Side::Plus));
    // Direct orientation of m o m against the grandparent.
    const auto& grand = cf.levels[0][parent_arc.parent].curve.vertices;
    Chart in = natural_chart(p);
    SpherePoint ffp = m(fp);
    Chart mid = natural_chart(fp), out = natural_chart(ffp);
    cplx d2 = m.chart_derivative(fp, mid, out) * m.chart_derivative(p, in, mid);
    cplx t = to_chart(v[j + 1], in) - to_chart(v[j], in);
    auto [gseg, gd] = nearest_segment(ffp, grand);
    ASSERT_LT(gd, 1e-4);
    cplx tg = to_chart(grand[gseg + 1], out) - to_chart(grand[gseg], out);
    Side direct = (std::conj(tg) * d2 * t).real() > 0 ? Side::Plus : Side::Minus;
    EXPECT_EQ(via, direct);
    ++checked;
  }
  EXPECT_EQ(checked, static_cast<int>(cf.levels[2].size()));
}

TEST(CutComplex, Per2DepthThreeFollowsDoublingRule) {
  auto fm = family_member(2, cplx(2.0, 0.1));
  cplx a = fm.parameter;
  Curve z = initial_cut(fm.map, make_segment(-a, -a + cplx(0.3, 0.2), 0.005));
  auto cf = build_cut_family(fm.map, z, 3);
  auto cx = build_cut_complex(cf);
  for (int n = 0; n < 3; ++n) {
    int expected = 0;
    for (const auto& pieces : cf.pieces[n]) {
      for (const auto& p : pieces) {
        int inc = (detail::critical_value_at(fm.map, p.vertices.front()) >= 0) +
                  (detail::critical_value_at(fm.map, p.vertices.back()) >= 0);
        expected += inc == 0 ? 2 : 1;
      }
    }
    EXPECT_EQ(cx.levels[n + 1].arc_count, expected);
  }
  EXPECT_LT(max_reprojection(cf), 1e-6);
}

TEST(Complement, ArcsDoNotSeparate) {
  auto cf = build_cut_family(kSquare, make_segment(-1.0, 1.0, 0.01), 1);
  EXPECT_EQ(complement_description(cf, 0, 128).component_count, 1);
  EXPECT_EQ(complement_description(cf, 1, 128).component_count, 1);
  EXPECT_THROW(complement_description(cf, 0, 32), DomainError);
}

TEST(Complement, ClosedCurveSeparates) {
  std::vector<SpherePoint> circle;
  for (int i = 0; i <= 64; ++i) circle.emplace_back(std::polar(0.7, 2 * M_PI * i / 64));
  circle.back() = circle.front();
  auto cf = build_cut_family(kSquare, make_polyline(circle, 0.01), 0);
  EXPECT_EQ(complement_description(cf, 0, 128).component_count, 2);

  std::vector<SpherePoint> unit;
  for (int i = 0; i <= 64; ++i) unit.emplace_back(std::polar(1.0, 2 * M_PI * i / 64 + 0.01));
  unit.back() = unit.front();
  auto cu = build_cut_family(kSquare, make_polyline(unit, 0.01), 0);
  EXPECT_EQ(complement_description(cu, 0, 128).component_count, 2);
}
