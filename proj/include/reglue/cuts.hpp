#pragma once

// Curve pullback by branch continuation, the initial cut Z = f^{-1}(beta),
// the cut family Z, f^{-1}(Z), f^{-2}(Z), ... and its finite-level
// combinatorial model: side labels, side transitions, intersection counts and
// the raster complement U_n.

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "reglue/geometry.hpp"
#include "reglue/parallel.hpp"
#include "reglue/raster.hpp"
#include "reglue/sphere.hpp"

namespace reglue {

/// Chordal tolerance for "this vertex is a critical value / critical point".
inline constexpr double kCriticalTolerance = 1e-12;
inline constexpr double kDefaultMaxEdge = 0.02;

struct Curve {
  std::vector<SpherePoint> vertices;
  std::string start_tag;
  std::string end_tag;
  /// Refinement bound on the chordal length of every edge.
  double max_edge = kDefaultMaxEdge;

  bool closed() const { return vertices.size() > 2 && vertices.front() == vertices.back(); }
  bool simple() const { return is_simple(vertices); }
};

/// Straight chart segment from a to b refined to `max_edge`.
inline Curve make_segment(const SpherePoint& a, const SpherePoint& b, double max_edge = kDefaultMaxEdge) {
  Curve c;
  c.vertices = refine_polyline({a, b}, max_edge);
  c.max_edge = max_edge;
  return c;
}

inline Curve make_polyline(const std::vector<SpherePoint>& pts, double max_edge = kDefaultMaxEdge) {
  Curve c;
  c.vertices = refine_polyline(pts, max_edge);
  c.max_edge = max_edge;
  return c;
}

struct PullbackOptions {
  double max_edge = kDefaultMaxEdge;
  double min_step = 1e-12;
};

namespace detail {

inline std::array<SpherePoint, 2> critical_values(const QuadraticRationalMap& m) {
  return {m(m.c1()), m(m.c2())};
}

/// Index of the critical value at p, or -1.
inline int critical_value_at(const QuadraticRationalMap& m, const SpherePoint& p) {
  auto cv = critical_values(m);
  for (int i = 0; i < 2; ++i) {
    if (chordal_distance(p, cv[i]) < kCriticalTolerance) return i;
  }
  return -1;
}

/// Preimages of w; a critical value yields its critical point twice, exactly.
inline std::array<SpherePoint, 2> snapped_preimages(const QuadraticRationalMap& m, const SpherePoint& w) {
  int i = critical_value_at(m, w);
  if (i >= 0) {
    SpherePoint c = m.critical_points()[i];
    return {c, c};
  }
  return m.preimages(w);
}

inline std::string location(const SpherePoint& p) { return p.to_string(); }

}  // namespace detail

/// Lifts gamma through m. Returns two curves, or one when the branches merge
/// at a critical-value endpoint (a closed curve when both endpoints are critical values).
inline std::vector<Curve> pullback_curve(const QuadraticRationalMap& m, const Curve& gamma,
                                         const PullbackOptions& opts = {}) {
  const auto& g = gamma.vertices;
  if (g.size() < 2) throw DomainError("curve needs at least two vertices");
  const std::size_t nseg = g.size() - 1;
  auto cv = detail::critical_values(m);
  for (std::size_t i = 1; i + 1 < g.size(); ++i) {
    if (detail::critical_value_at(m, g[i]) >= 0) {
      throw DomainError("subdivide: interior critical value at " + detail::location(g[i]));
    }
  }
  for (std::size_t i = 0; i < nseg; ++i) {
    for (const auto& v : cv) {
      if (chordal_distance(v, g[i]) < kCriticalTolerance || chordal_distance(v, g[i + 1]) < kCriticalTolerance) continue;
      if (distance_to_segment(v, g[i], g[i + 1]) < kCriticalTolerance) {
        throw DomainError("subdivide: interior critical value at " + detail::location(v));
      }
    }
  }
  const bool start_critical = detail::critical_value_at(m, g.front()) >= 0;
  const bool end_critical = detail::critical_value_at(m, g.back()) >= 0;

  auto point_at = [&](std::size_t seg, double s) -> SpherePoint {
    if (s >= 1.0) return g[seg + 1];
    if (s <= 0.0) return g[seg];
    return segment_point(g[seg], g[seg + 1], s);
  };

  std::array<std::vector<SpherePoint>, 2> br;
  auto p0 = detail::snapped_preimages(m, g.front());
  br[0].push_back(p0[0]);
  br[1].push_back(p0[1]);

  for (std::size_t seg = 0; seg < nseg; ++seg) {
    double s = 0.0;
    double ds = 1.0;
    while (s < 1.0) {
      double s1 = std::min(1.0, s + ds);
      SpherePoint w = point_at(seg, s1);
      auto q = detail::snapped_preimages(m, w);
      const SpherePoint& x0 = br[0].back();
      const SpherePoint& x1 = br[1].back();
      bool coincide = chordal_distance(x0, x1) < kCriticalTolerance;
      int assign = 0;  // 0: x0<-q0, x1<-q1; 1: swapped
      bool ok;
      double sep = chordal_distance(q[0], q[1]);
      if (coincide) {
        ok = true;
      } else {
        double straight = chordal_distance(x0, q[0]) + chordal_distance(x1, q[1]);
        double swapped = chordal_distance(x0, q[1]) + chordal_distance(x1, q[0]);
        assign = swapped < straight ? 1 : 0;
        double e0 = chordal_distance(x0, q[assign]);
        double e1 = chordal_distance(x1, q[1 - assign]);
        bool merging = sep < kCriticalTolerance;
        ok = merging || (e0 < sep / 3.0 && e1 < sep / 3.0);
      }
      if (ok) {
        double e0 = chordal_distance(x0, q[assign]);
        double e1 = chordal_distance(x1, q[1 - assign]);
        ok = e0 <= opts.max_edge && e1 <= opts.max_edge;
      }
      if (!ok) {
        ds *= 0.5;
        if (ds < opts.min_step) {
          throw NumericError("continuation ambiguity unresolved near " + detail::location(w));
        }
        continue;
      }
      if (chordal_distance(br[0].back(), q[assign]) > 0.0 || chordal_distance(br[1].back(), q[1 - assign]) > 0.0) {
        br[0].push_back(q[assign]);
        br[1].push_back(q[1 - assign]);
      }
      s = s1;
      ds = std::min(1.0, ds * 2.0);
    }
  }

  auto make = [&](std::vector<SpherePoint> v, std::string a, std::string b) {
    Curve c;
    c.vertices = std::move(v);
    c.start_tag = std::move(a);
    c.end_tag = std::move(b);
    c.max_edge = opts.max_edge;
    return c;
  };
  if (!start_critical && !end_critical) {
    std::vector<Curve> out{make(br[0], gamma.start_tag, gamma.end_tag), make(br[1], gamma.start_tag, gamma.end_tag)};
    return out;
  }
  std::vector<SpherePoint> joined;
  if (start_critical) {
    // reverse(b0) + b1[1:], passing through the critical point
    joined.assign(br[0].rbegin(), br[0].rend());
    joined.insert(joined.end(), br[1].begin() + 1, br[1].end());
    return {make(std::move(joined), gamma.end_tag, gamma.end_tag)};
  }
  joined = br[0];
  joined.insert(joined.end(), br[1].rbegin() + 1, br[1].rend());
  return {make(std::move(joined), gamma.start_tag, gamma.start_tag)};
}

/// Max chordal distance from f(p), p a vertex of `child`, to the polyline `parent`.
inline double reprojection_error(const QuadraticRationalMap& m, const Curve& child, const Curve& parent) {
  double e = 0.0;
  for (const auto& p : child.vertices) e = std::max(e, distance_to_polyline(m(p), parent.vertices));
  return e;
}

struct TwoToOneReport {
  bool passed = false;
  int samples = 0;
  /// Max chordal distance from f(vertex of Z) to beta.
  double max_reprojection_error = 0.0;
  /// Max distance of a sampled preimage from Z.
  double max_preimage_offset = 0.0;
  /// Min chordal gap between the two preimages of an interior sample.
  double min_preimage_gap = 2.0;
};

/// Samples `samples` interior points of beta and checks that each has two
/// distinct preimages on Z while the critical value has exactly one.
inline TwoToOneReport two_to_one_check(const QuadraticRationalMap& m, const Curve& z, const Curve& beta,
                                       int samples = 200) {
  TwoToOneReport rep;
  rep.samples = samples;
  rep.max_reprojection_error = reprojection_error(m, z, beta);
  const auto& b = beta.vertices;
  const std::size_t nseg = b.size() - 1;
  const double offset_tol = 1e-6 + z.max_edge * z.max_edge;
  bool ok = true;
  for (int i = 1; i <= samples; ++i) {
    double t = static_cast<double>(i) / (samples + 1) * nseg;
    std::size_t seg = std::min(nseg - 1, static_cast<std::size_t>(t));
    SpherePoint w = segment_point(b[seg], b[seg + 1], t - seg);
    auto pre = m.preimages(w);
    double gap = chordal_distance(pre[0], pre[1]);
    rep.min_preimage_gap = std::min(rep.min_preimage_gap, gap);
    for (const auto& p : pre) rep.max_preimage_offset = std::max(rep.max_preimage_offset, distance_to_polyline(p, z.vertices));
    if (!(gap > 1e-9)) ok = false;
  }
  auto at_v = m.preimages(b.front());
  bool single = chordal_distance(at_v[0], at_v[1]) < 1e-6 && chordal_distance(at_v[0], m.c2()) < 1e-6;
  rep.passed = ok && single && rep.max_preimage_offset < offset_tol && rep.max_reprojection_error < 1e-9;
  return rep;
}

/// Z = f^{-1}(beta) for beta starting at the free critical value v = f(c2).
inline Curve initial_cut(const QuadraticRationalMap& m, Curve beta, const PullbackOptions& opts = {}) {
  if (beta.vertices.size() < 2) throw DomainError("beta needs at least two vertices");
  SpherePoint v = m(m.c2());
  if (chordal_distance(beta.vertices.front(), v) > 1e-9) {
    throw DomainError("beta does not start at the critical value");
  }
  beta.vertices.front() = v;
  SpherePoint other = m(m.c1());
  for (std::size_t i = 1; i < beta.vertices.size(); ++i) {
    if (chordal_distance(beta.vertices[i], other) < kCriticalTolerance) {
      throw DomainError("beta contains the other critical value");
    }
  }
  auto parts = pullback_curve(m, beta, opts);
  if (parts.size() != 1) throw DomainError("beta does not start at the critical value");
  Curve z = std::move(parts.front());
  if (!z.simple()) throw DomainError("initial cut self-intersects");
  bool through_c2 = false;
  for (const auto& p : z.vertices) through_c2 = through_c2 || chordal_distance(p, m.c2()) < kCriticalTolerance;
  if (!through_c2) throw NumericError("initial cut misses the critical point");
  return z;
}

// ---------------------------------------------------------------------------
// Cut family

struct FamilyArc {
  Curve curve;
  /// Index of the parent arc on the previous level (-1 on level 0).
  int parent = -1;
  /// Piece of the parent after subdivision at interior critical values.
  int parent_piece = -1;
};

struct CutFamily {
  QuadraticRationalMap map;
  std::vector<std::vector<FamilyArc>> levels;
  /// Pieces of each arc split at interior critical values: pieces[level][arc].
  std::vector<std::vector<std::vector<Curve>>> pieces;

  int depth() const { return static_cast<int>(levels.size()) - 1; }
};

/// Splits a curve at vertices (inserted when needed) lying on critical values.
inline std::vector<Curve> split_at_critical_values(const QuadraticRationalMap& m, const Curve& c) {
  auto cv = detail::critical_values(m);
  std::vector<SpherePoint> v;
  const auto& in = c.vertices;
  v.push_back(in.front());
  for (std::size_t i = 0; i + 1 < in.size(); ++i) {
    for (const auto& w : cv) {
      if (chordal_distance(w, in[i]) < kCriticalTolerance || chordal_distance(w, in[i + 1]) < kCriticalTolerance) continue;
      if (distance_to_segment(w, in[i], in[i + 1]) < kCriticalTolerance) v.push_back(w);
    }
    v.push_back(in[i + 1]);
  }
  std::vector<Curve> out;
  Curve cur;
  cur.max_edge = c.max_edge;
  cur.start_tag = c.start_tag;
  for (std::size_t i = 0; i < v.size(); ++i) {
    int at = detail::critical_value_at(m, v[i]);
    SpherePoint p = at >= 0 ? cv[at] : v[i];
    cur.vertices.push_back(p);
    if (at >= 0 && i > 0 && i + 1 < v.size()) {
      cur.end_tag = "critical value";
      out.push_back(cur);
      cur.vertices = {p};
      cur.start_tag = "critical value";
    }
  }
  cur.end_tag = c.end_tag;
  out.push_back(cur);
  for (auto& piece : out) {
    if (detail::critical_value_at(m, piece.vertices.front()) >= 0) piece.start_tag = "critical value";
    if (detail::critical_value_at(m, piece.vertices.back()) >= 0) piece.end_tag = "critical value";
  }
  return out;
}

/// levels[0] = initial arcs; levels[n+1] = pullbacks of the critical-value pieces of levels[n].
inline CutFamily build_cut_family(const QuadraticRationalMap& m, const std::vector<Curve>& initial, int depth,
                                  const PullbackOptions& opts = {}) {
  if (depth < 0) throw DomainError("depth must be non-negative");
  if (initial.empty()) throw DomainError("cut family needs an initial arc");
  CutFamily cf{m, {}, {}};
  cf.levels.emplace_back();
  for (const auto& z : initial) cf.levels[0].push_back(FamilyArc{z, -1, -1});
  for (int n = 0;; ++n) {
    const auto& level = cf.levels[n];
    std::vector<std::vector<Curve>> split(level.size());
    for (std::size_t i = 0; i < level.size(); ++i) split[i] = split_at_critical_values(m, level[i].curve);
    cf.pieces.push_back(split);
    if (n == depth) break;
    // Flatten pieces; pull them back in parallel into per-piece slots.
    std::vector<std::pair<int, int>> jobs;
    for (std::size_t i = 0; i < split.size(); ++i)
      for (std::size_t j = 0; j < split[i].size(); ++j) jobs.emplace_back(static_cast<int>(i), static_cast<int>(j));
    std::vector<std::vector<Curve>> lifted(jobs.size());
    std::vector<std::string> failure(jobs.size());
    parallel_for(0, static_cast<std::int64_t>(jobs.size()), [&](std::int64_t t) {
      try {
        lifted[t] = pullback_curve(m, split[jobs[t].first][jobs[t].second], opts);
      } catch (const Error& e) {
        failure[t] = e.what();
      }
    });
    for (std::size_t t = 0; t < jobs.size(); ++t) {
      if (!failure[t].empty()) {
        throw NumericError("level " + std::to_string(n) + " arc " + std::to_string(jobs[t].first) + ": " + failure[t]);
      }
    }
    std::vector<FamilyArc> next;
    for (std::size_t t = 0; t < jobs.size(); ++t)
      for (auto& c : lifted[t]) next.push_back(FamilyArc{std::move(c), jobs[t].first, jobs[t].second});
    cf.levels.push_back(std::move(next));
  }
  return cf;
}

inline CutFamily build_cut_family(const QuadraticRationalMap& m, const Curve& z, int depth,
                                  const PullbackOptions& opts = {}) {
  return build_cut_family(m, std::vector<Curve>{z}, depth, opts);
}

// ---------------------------------------------------------------------------
// Cut complex

enum class Side { Plus = +1, Minus = -1 };

/// On vertices [first, last] of a child arc, the + side maps to parent side `plus_to`
/// and the - side to the opposite one.
struct SideTransition {
  int first_vertex = 0;
  int last_vertex = 0;
  Side plus_to = Side::Plus;
};

struct ComplexArc {
  int level = 0;
  int index = 0;
  int parent = -1;
  int parent_piece = -1;
  /// Endpoint incidences: tags of the two ends.
  std::string start_tag;
  std::string end_tag;
  bool closed = false;
  bool simple = true;
  std::vector<SideTransition> transitions;
};

struct LevelStats {
  int arc_count = 0;
  int intersection_count = 0;
};

struct CutComplex {
  std::vector<ComplexArc> arcs;
  std::vector<LevelStats> levels;
  /// Unique intersection points between distinct arcs of different levels.
  int cross_level_intersections = 0;
  /// All arcs simple and pairwise disjoint.
  bool disjoint = true;
};

namespace detail {

/// Tangent of the polyline segment i in chart `ch`.
inline cplx tangent_in(const std::vector<SpherePoint>& v, std::size_t i, Chart ch) {
  return to_chart(v[i + 1], ch) - to_chart(v[i], ch);
}

/// Orientation of f along the segment [v[i], v[i+1]] relative to the parent polyline:
/// +1 when the image runs along the parent's direction, -1 against, 0 when degenerate.
inline int segment_orientation(const QuadraticRationalMap& m, const std::vector<SpherePoint>& v, std::size_t i,
                               const std::vector<SpherePoint>& parent) {
  SpherePoint mid = segment_point(v[i], v[i + 1], 0.5);
  Chart in = natural_chart(mid);
  SpherePoint img = m(mid);
  Chart out = natural_chart(img);
  try {
    cplx t = tangent_in(v, i, in);
    cplx df = m.chart_derivative(mid, in, out);
    if (std::abs(df) < 1e-12) return 0;
    auto [seg, dist] = nearest_segment(img, parent);
    (void)dist;
    cplx tp = tangent_in(parent, seg, out);
    double s = (std::conj(tp) * df * t).real();
    if (std::abs(s) < 1e-300) return 0;
    return s > 0 ? 1 : -1;
  } catch (const DomainError&) {
    return 0;
  }
}

struct SegmentRef {
  int arc;
  int seg;
};

/// Unique intersection points between segments of different arcs in `a` and `b`
/// (a == b compares arcs of one set pairwise). Bucketed on the sphere.
inline std::vector<SpherePoint> arc_intersections(const std::vector<const std::vector<SpherePoint>*>& a,
                                                  const std::vector<const std::vector<SpherePoint>*>& b,
                                                  bool same_set) {
  constexpr int G = 64;
  constexpr double W = 1.25;
  auto bucket_keys = [&](const SpherePoint& p, const SpherePoint& q, std::vector<int>& keys) {
    keys.clear();
    for (int ch = 0; ch < 2; ++ch) {
      Chart c = ch == 0 ? Chart::Plane : Chart::Inverted;
      if (c == Chart::Plane && (p.is_infinity() || q.is_infinity())) continue;
      if (c == Chart::Inverted && ((p.is_finite() && p.value() == cplx(0.0, 0.0)) ||
                                   (q.is_finite() && q.value() == cplx(0.0, 0.0))))
        continue;
      cplx zp = to_chart(p, c), zq = to_chart(q, c);
      double x0 = std::min(zp.real(), zq.real()), x1 = std::max(zp.real(), zq.real());
      double y0 = std::min(zp.imag(), zq.imag()), y1 = std::max(zp.imag(), zq.imag());
      if (x1 < -W || y1 < -W || x0 > W || y0 > W) continue;
      auto cell = [&](double u) { return std::clamp(static_cast<int>((u + W) / (2 * W) * G), 0, G - 1); };
      for (int gx = cell(x0); gx <= cell(x1); ++gx)
        for (int gy = cell(y0); gy <= cell(y1); ++gy) keys.push_back((ch * G + gx) * G + gy);
    }
  };
  std::unordered_map<int, std::vector<SegmentRef>> grid;
  std::vector<int> keys;
  for (std::size_t i = 0; i < b.size(); ++i) {
    const auto& v = *b[i];
    for (std::size_t s = 0; s + 1 < v.size(); ++s) {
      bucket_keys(v[s], v[s + 1], keys);
      for (int k : keys) grid[k].push_back({static_cast<int>(i), static_cast<int>(s)});
    }
  }
  std::vector<SpherePoint> found;
  auto add = [&](const SpherePoint& p) {
    for (const auto& q : found)
      if (chordal_distance(p, q) < 1e-9) return;
    found.push_back(p);
  };
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& v = *a[i];
    for (std::size_t s = 0; s + 1 < v.size(); ++s) {
      bucket_keys(v[s], v[s + 1], keys);
      for (int k : keys) {
        auto it = grid.find(k);
        if (it == grid.end()) continue;
        for (const auto& ref : it->second) {
          if (same_set && ref.arc <= static_cast<int>(i)) continue;
          const auto& w = *b[ref.arc];
          auto r = segment_intersection(v[s], v[s + 1], w[ref.seg], w[ref.seg + 1]);
          if (r) add(*r);
        }
      }
    }
  }
  return found;
}

}  // namespace detail

/// Side labels, side transitions and intersection statistics of a cut family.
inline CutComplex build_cut_complex(const CutFamily& cf) {
  const auto& m = cf.map;
  CutComplex cx;
  for (int n = 0; n <= cf.depth(); ++n) {
    const auto& level = cf.levels[n];
    for (int i = 0; i < static_cast<int>(level.size()); ++i) {
      const auto& fa = level[i];
      ComplexArc a;
      a.level = n;
      a.index = i;
      a.parent = fa.parent;
      a.parent_piece = fa.parent_piece;
      a.start_tag = fa.curve.start_tag;
      a.end_tag = fa.curve.end_tag;
      a.closed = fa.curve.closed();
      a.simple = fa.curve.simple();
      if (n > 0) {
        const auto& parent = cf.pieces[n - 1][fa.parent][fa.parent_piece].vertices;
        const auto& v = fa.curve.vertices;
        // Sub-pieces between critical points carry one transition each.
        std::vector<int> cuts{0};
        for (int j = 1; j + 1 < static_cast<int>(v.size()); ++j) {
          for (const auto& c : m.critical_points()) {
            if (chordal_distance(v[j], c) < kCriticalTolerance) cuts.push_back(j);
          }
        }
        cuts.push_back(static_cast<int>(v.size()) - 1);
        for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
          int sign = 0;
          for (int j = cuts[k]; j < cuts[k + 1] && sign == 0; ++j) {
            sign = detail::segment_orientation(m, v, static_cast<std::size_t>(j), parent);
          }
          if (sign == 0) throw NumericError("orientation test degenerate on level " + std::to_string(n) + " arc " + std::to_string(i));
          a.transitions.push_back({cuts[k], cuts[k + 1], sign > 0 ? Side::Plus : Side::Minus});
        }
      }
      if (!a.simple) cx.disjoint = false;
      cx.arcs.push_back(std::move(a));
    }
    std::vector<const std::vector<SpherePoint>*> ptrs;
    for (const auto& fa : level) ptrs.push_back(&fa.curve.vertices);
    LevelStats st;
    st.arc_count = static_cast<int>(level.size());
    st.intersection_count = static_cast<int>(detail::arc_intersections(ptrs, ptrs, true).size());
    if (st.intersection_count > 0) cx.disjoint = false;
    cx.levels.push_back(st);
  }
  for (int n = 0; n <= cf.depth(); ++n) {
    for (int l = n + 1; l <= cf.depth(); ++l) {
      std::vector<const std::vector<SpherePoint>*> a, b;
      for (const auto& fa : cf.levels[n]) a.push_back(&fa.curve.vertices);
      for (const auto& fa : cf.levels[l]) b.push_back(&fa.curve.vertices);
      cx.cross_level_intersections += static_cast<int>(detail::arc_intersections(a, b, false).size());
    }
  }
  if (cx.cross_level_intersections > 0) cx.disjoint = false;
  return cx;
}

/// Side of the parent reached from side `s` of the child near vertex `vertex`.
inline Side transition_at(const ComplexArc& a, int vertex, Side s) {
  for (const auto& t : a.transitions) {
    if (vertex >= t.first_vertex && vertex < t.last_vertex) {
      return s == Side::Plus ? t.plus_to : (t.plus_to == Side::Plus ? Side::Minus : Side::Plus);
    }
  }
  throw DomainError("vertex outside the arc");
}

// ---------------------------------------------------------------------------
// Complement raster U_n

struct ComplementDescription {
  int component_count = 0;
  SphereGrid grid;
  /// Component id per pixel, -1 on arcs and non-owned pixels.
  std::vector<int> labels;
};

/// Rasterizes the complement of the arcs of levels 0..n and labels its components.
/// A pixel is removed when an arc passes within half a pixel diagonal of its center.
inline ComplementDescription complement_description(const CutFamily& cf, int n, int resolution) {
  if (resolution < 64) throw DomainError("too coarse");
  if (n < 0 || n > cf.depth()) throw DomainError("level exceeds the family depth");
  SphereGrid grid(resolution);
  const double h = grid.pixel_size();
  const double reach = h * std::sqrt(0.5);
  std::vector<char> blocked(grid.size(), 0);
  for (int l = 0; l <= n; ++l) {
    for (const auto& fa : cf.levels[l]) {
      auto v = refine_polyline(fa.curve.vertices, 0.25 * h);
      for (int ch = 0; ch < 2; ++ch) {
        Chart c = SphereGrid::chart_kind(ch);
        for (std::size_t s = 0; s + 1 < v.size(); ++s) {
          if (c == Chart::Plane && (v[s].is_infinity() || v[s + 1].is_infinity())) continue;
          if (c == Chart::Inverted && ((v[s].is_finite() && std::abs(v[s].value()) < 0.2) ||
                                       (v[s + 1].is_finite() && std::abs(v[s + 1].value()) < 0.2)))
            continue;
          cplx a = to_chart(v[s], c), b = to_chart(v[s + 1], c);
          if (std::abs(a) > 3.0 || std::abs(b) > 3.0) continue;
          double x0 = std::min(a.real(), b.real()) - reach, x1 = std::max(a.real(), b.real()) + reach;
          double y0 = std::min(a.imag(), b.imag()) - reach, y1 = std::max(a.imag(), b.imag()) + reach;
          int c0 = std::max(0, static_cast<int>(std::floor((x0 + SphereGrid::kHalfWidth) / h)));
          int c1 = std::min(resolution - 1, static_cast<int>(std::floor((x1 + SphereGrid::kHalfWidth) / h)));
          int r0 = std::max(0, static_cast<int>(std::floor((y0 + SphereGrid::kHalfWidth) / h)));
          int r1 = std::min(resolution - 1, static_cast<int>(std::floor((y1 + SphereGrid::kHalfWidth) / h)));
          cplx d = b - a;
          double len2 = std::norm(d);
          for (int r = r0; r <= r1; ++r) {
            for (int col = c0; col <= c1; ++col) {
              std::int64_t idx = grid.index(ch, r, col);
              cplx p = grid.chart_coordinate(idx);
              double t = len2 > 0 ? std::clamp(((p - a) * std::conj(d)).real() / len2, 0.0, 1.0) : 0.0;
              if (std::abs(p - (a + t * d)) <= reach) blocked[idx] = 1;
            }
          }
        }
      }
    }
  }
  std::vector<int> key(grid.size());
  for (std::int64_t i = 0; i < grid.size(); ++i) key[i] = blocked[i] ? -1 : 0;
  auto [labels, count] = label_components(grid, key);
  return ComplementDescription{count, std::move(grid), std::move(labels)};
}

}  // namespace reglue
