#pragma once

// Broken lines on the sphere. A segment between two vertices is the straight
// segment in its interpolation chart: the 1/z chart when an endpoint is
// infinity or both endpoints lie outside the unit disk, the plane otherwise.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "reglue/sphere.hpp"

namespace reglue {

inline Chart segment_chart(const SpherePoint& a, const SpherePoint& b) {
  if (a.is_infinity() || b.is_infinity()) return Chart::Inverted;
  if (std::abs(a.value()) > 1.0 && std::abs(b.value()) > 1.0) return Chart::Inverted;
  return Chart::Plane;
}

/// Point at parameter s in [0,1] on the segment [a,b].
inline SpherePoint segment_point(const SpherePoint& a, const SpherePoint& b, double s) {
  if (s <= 0.0) return a;
  if (s >= 1.0) return b;
  Chart ch = segment_chart(a, b);
  cplx za = to_chart(a, ch), zb = to_chart(b, ch);
  return from_chart(za + s * (zb - za), ch);
}

/// Closest point of the chart-straight segment [a,b] to p, measured in the segment chart.
inline SpherePoint closest_on_segment(const SpherePoint& p, const SpherePoint& a, const SpherePoint& b) {
  Chart ch = segment_chart(a, b);
  if (ch == Chart::Plane && p.is_infinity()) {
    return std::abs(a.value()) >= std::abs(b.value()) ? a : b;
  }
  if (ch == Chart::Inverted && p.is_finite() && p.value() == cplx(0.0, 0.0)) {
    return std::abs(to_chart(a, ch)) >= std::abs(to_chart(b, ch)) ? a : b;
  }
  cplx za = to_chart(a, ch), zb = to_chart(b, ch), zp = to_chart(p, ch);
  cplx d = zb - za;
  double len2 = std::norm(d);
  if (len2 == 0.0) return a;
  double s = std::clamp(((zp - za) * std::conj(d)).real() / len2, 0.0, 1.0);
  return segment_point(a, b, s);
}

inline double distance_to_segment(const SpherePoint& p, const SpherePoint& a, const SpherePoint& b) {
  double d = chordal_distance(p, closest_on_segment(p, a, b));
  return std::min({d, chordal_distance(p, a), chordal_distance(p, b)});
}

/// Chordal distance from p to a polyline (a single vertex counts as a point).
inline double distance_to_polyline(const SpherePoint& p, const std::vector<SpherePoint>& poly) {
  if (poly.empty()) return 2.0;
  double best = chordal_distance(p, poly.front());
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) best = std::min(best, distance_to_segment(p, poly[i], poly[i + 1]));
  return best;
}

/// Index of the polyline segment nearest to p, with the distance.
inline std::pair<std::size_t, double> nearest_segment(const SpherePoint& p, const std::vector<SpherePoint>& poly) {
  std::size_t best = 0;
  double d = 3.0;
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    double e = distance_to_segment(p, poly[i], poly[i + 1]);
    if (e < d) {
      d = e;
      best = i;
    }
  }
  return {best, d};
}

/// Symmetric Hausdorff distance between polylines, vertex to polyline in both directions.
inline double polyline_hausdorff(const std::vector<SpherePoint>& a, const std::vector<SpherePoint>& b) {
  double h = 0.0;
  for (const auto& p : a) h = std::max(h, distance_to_polyline(p, b));
  for (const auto& p : b) h = std::max(h, distance_to_polyline(p, a));
  return h;
}

/// Inserts chart-midpoints until every edge is at most `max_edge` chordal.
inline std::vector<SpherePoint> refine_polyline(const std::vector<SpherePoint>& poly, double max_edge) {
  if (!(max_edge > 0.0)) throw DomainError("refinement bound must be positive");
  std::vector<SpherePoint> out;
  if (poly.empty()) return out;
  out.push_back(poly.front());
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) {
    const SpherePoint& a = poly[i];
    const SpherePoint& b = poly[i + 1];
    double len = chordal_distance(a, b);
    int pieces = std::max(1, static_cast<int>(std::ceil(len / max_edge)));
    // Chart-straight parameterization is not chordal arc length; refine until it holds.
    for (;;) {
      bool ok = true;
      SpherePoint prev = a;
      for (int j = 1; j <= pieces && ok; ++j) {
        SpherePoint q = segment_point(a, b, static_cast<double>(j) / pieces);
        if (chordal_distance(prev, q) > max_edge) ok = false;
        prev = q;
      }
      if (ok || pieces > (1 << 22)) break;
      pieces *= 2;
    }
    for (int j = 1; j < pieces; ++j) out.push_back(segment_point(a, b, static_cast<double>(j) / pieces));
    out.push_back(b);
  }
  return out;
}

inline double max_edge_length(const std::vector<SpherePoint>& poly) {
  double m = 0.0;
  for (std::size_t i = 0; i + 1 < poly.size(); ++i) m = std::max(m, chordal_distance(poly[i], poly[i + 1]));
  return m;
}

namespace detail {

inline double orient(cplx a, cplx b, cplx c) {
  return (b.real() - a.real()) * (c.imag() - a.imag()) - (b.imag() - a.imag()) * (c.real() - a.real());
}

inline bool on_segment_collinear(cplx a, cplx b, cplx p) {
  return std::min(a.real(), b.real()) <= p.real() && p.real() <= std::max(a.real(), b.real()) &&
         std::min(a.imag(), b.imag()) <= p.imag() && p.imag() <= std::max(a.imag(), b.imag());
}

}  // namespace detail

/// Intersection of planar segments [a,b] and [c,d], closed at the endpoints.
/// For collinear overlap returns one shared point.
inline std::optional<cplx> planar_segment_intersection(cplx a, cplx b, cplx c, cplx d) {
  double d1 = detail::orient(c, d, a), d2 = detail::orient(c, d, b);
  double d3 = detail::orient(a, b, c), d4 = detail::orient(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    double s = d1 / (d1 - d2);
    return a + s * (b - a);
  }
  if (d1 == 0 && detail::on_segment_collinear(c, d, a)) return a;
  if (d2 == 0 && detail::on_segment_collinear(c, d, b)) return b;
  if (d3 == 0 && detail::on_segment_collinear(a, b, c)) return c;
  if (d4 == 0 && detail::on_segment_collinear(a, b, d)) return d;
  return std::nullopt;
}

/// Chart in which both segments are tested, or nullopt when they are too far
/// apart on the sphere to meet.
inline std::optional<Chart> common_chart(const std::array<SpherePoint, 4>& pts) {
  bool plane = true, inverted = true;
  for (const auto& p : pts) {
    if (p.is_infinity() || std::abs(p.value()) > 1e3) plane = false;
    if (p.is_finite() && std::abs(p.value()) < 1e-3) inverted = false;
  }
  if (plane) {
    double m = 0.0;
    for (const auto& p : pts) m = std::max(m, std::abs(p.value()));
    if (m <= 1.0 || !inverted) return Chart::Plane;
  }
  if (inverted) return Chart::Inverted;
  return std::nullopt;
}

/// Intersection point of the sphere segments [a,b] and [c,d] (closed).
inline std::optional<SpherePoint> segment_intersection(const SpherePoint& a, const SpherePoint& b,
                                                        const SpherePoint& c, const SpherePoint& d) {
  auto ch = common_chart({a, b, c, d});
  if (!ch) return std::nullopt;
  auto r = planar_segment_intersection(to_chart(a, *ch), to_chart(b, *ch), to_chart(c, *ch), to_chart(d, *ch));
  if (!r) return std::nullopt;
  return from_chart(*r, *ch);
}

/// True when no two non-adjacent segments meet (first and last segments are
/// adjacent when the polyline is closed).
inline bool is_simple(const std::vector<SpherePoint>& poly) {
  const std::size_t n = poly.size();
  if (n < 3) return true;
  const bool closed = poly.front() == poly.back();
  const std::size_t segs = n - 1;
  for (std::size_t i = 0; i < segs; ++i) {
    for (std::size_t j = i + 1; j < segs; ++j) {
      if (j == i + 1) {
        // Adjacent: they may only share the common vertex.
        auto r = segment_intersection(poly[i], poly[i + 1], poly[j], poly[j + 1]);
        if (r && chordal_distance(*r, poly[j]) > 1e-14) return false;
        if (chordal_distance(poly[i], poly[j + 1]) < 1e-14 && !(closed && i == 0 && j == segs - 1)) return false;
        continue;
      }
      auto r = segment_intersection(poly[i], poly[i + 1], poly[j], poly[j + 1]);
      if (!r) continue;
      if (closed && i == 0 && j == segs - 1 && chordal_distance(*r, poly[0]) < 1e-14) continue;
      return false;
    }
  }
  return true;
}

}  // namespace reglue
