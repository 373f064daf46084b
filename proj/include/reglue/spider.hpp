#pragma once

// Spider algorithm for critically finite quadratic polynomials z^2 + c given by
// an external angle p/q. Marked points approximate the critical orbit; each leg is
// a path to infinity whose far end is radial at the angle of its point.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "reglue/cuts.hpp"
#include "reglue/errors.hpp"
#include "reglue/sphere.hpp"

namespace reglue {

struct OrbitPortrait {
  std::int64_t p = 0;
  std::int64_t q = 1;
  /// Numerators of the doubling orbit over q, starting at p.
  std::vector<std::int64_t> orbit;
  int preperiod = 0;
  int period = 1;

  int marked_count() const { return preperiod + period; }
  double angle(int i) const { return static_cast<double>(orbit[i]) / static_cast<double>(q); }
  /// Index of the marked point that x_i maps to.
  int successor(int i) const { return i + 1 < marked_count() ? i + 1 : preperiod; }
};

inline OrbitPortrait angle_to_portrait(std::int64_t p, std::int64_t q) {
  if (q <= 0 || p < 0 || p >= q) throw DomainError("angle must satisfy 0 <= p < q");
  if (std::gcd(p, q) != 1) throw DomainError("angle must be in lowest terms");
  OrbitPortrait out;
  out.p = p;
  out.q = q;
  std::int64_t a = p;
  for (;;) {
    for (std::size_t i = 0; i < out.orbit.size(); ++i) {
      if (out.orbit[i] == a) {
        out.preperiod = static_cast<int>(i);
        out.period = static_cast<int>(out.orbit.size() - i);
        return out;
      }
    }
    out.orbit.push_back(a);
    a = (2 * a) % q;
  }
}

struct SpiderState {
  cplx c;
  /// x_0 = c is the critical value; x_i approximates f^i(c).
  std::vector<cplx> points;
  /// legs[i] runs from points[i] to infinity; the last vertex is infinity.
  std::vector<Curve> legs;
  int iteration = 0;
};

struct SpiderOptions {
  /// Radius where legs become exactly radial.
  double radius = 1e4;
  /// Lifted edges stay below this fraction of their distance from 0.
  double relative_edge = 0.1;
  /// Chord tolerance, relative to |z|, when thinning lifted legs.
  double thinning = 1e-3;
};

namespace detail {

inline cplx unit(double angle) { return std::polar(1.0, 2.0 * std::numbers::pi * angle); }

/// Finite part of a leg: x_i, ..., a point of modulus radius at the leg angle.
inline std::vector<cplx> radial_tail(cplx from, double angle, double radius) {
  std::vector<cplx> out{from};
  double r = std::max(std::abs(from), 1e-3) * 1.5;
  for (; r < radius; r *= 1.5) out.push_back(r * unit(angle));
  out.push_back(radius * unit(angle));
  return out;
}

inline Curve make_leg(const std::vector<cplx>& finite) {
  Curve leg;
  for (cplx z : finite) leg.vertices.emplace_back(z);
  leg.vertices.push_back(SpherePoint::infinity());
  leg.start_tag = "marked point";
  leg.end_tag = "infinity";
  return leg;
}

inline std::vector<cplx> leg_finite(const Curve& leg) {
  std::vector<cplx> out;
  for (const auto& v : leg.vertices)
    if (v.is_finite()) out.push_back(v.value());
  return out;
}

/// Lift of the straight segment wa -> wb under z^2 + c starting from za (a root of
/// z^2 = wa - c); appends the lifted vertices after za.
inline void lift_segment(cplx c, cplx wa, cplx wb, cplx za, const SpiderOptions& opts, std::vector<cplx>& out,
                         int depth = 0) {
  cplx s = std::sqrt(wb - c);
  cplx zb = std::abs(s - za) <= std::abs(s + za) ? s : -s;
  const double match = std::abs(zb - za), sep = 2.0 * std::abs(s);
  const double scale = std::max(std::abs(za), std::abs(zb));
  if (match < sep / 3.0 && match <= opts.relative_edge * scale) {
    out.push_back(zb);
    return;
  }
  if (depth > 60 || std::abs(wb - wa) < 1e-14 * (1.0 + std::abs(wa))) {
    throw NumericError("pinching: leg passes through the critical value near " + std::to_string(wb.real()) + " " +
                       std::to_string(wb.imag()));
  }
  cplx wm = 0.5 * (wa + wb);
  lift_segment(c, wa, wm, za, opts, out, depth + 1);
  lift_segment(c, wm, wb, out.back(), opts, out, depth + 1);
}

/// Drops vertices that lie within the thinning tolerance of a longer chord.
inline std::vector<cplx> thin(const std::vector<cplx>& pts, const SpiderOptions& opts) {
  if (pts.size() < 3) return pts;
  std::vector<cplx> out{pts.front()};
  std::size_t anchor = 0;
  for (std::size_t k = 2; k < pts.size(); ++k) {
    cplx a = pts[anchor], b = pts[k];
    bool ok = std::abs(b - a) <= opts.relative_edge * std::max(std::abs(a), std::abs(b));
    for (std::size_t m = anchor + 1; m < k && ok; ++m) {
      cplx d = b - a;
      double t = std::clamp(std::real((pts[m] - a) * std::conj(d)) / std::norm(d), 0.0, 1.0);
      ok = std::abs(pts[m] - (a + t * d)) <= opts.thinning * std::abs(pts[m]);
    }
    if (!ok) {
      out.push_back(pts[k - 1]);
      anchor = k - 1;
    }
  }
  out.push_back(pts.back());
  return out;
}

/// Lift of the leg ending at w_0 = finite.front() selected by its angle at infinity.
/// When `to_critical` is set the leg ends at the critical value and lifts to 0.
inline std::vector<cplx> lift_leg(cplx c, const std::vector<cplx>& finite, double angle, bool to_critical,
                                  const SpiderOptions& opts) {
  const std::size_t m = finite.size() - 1;
  cplx s = std::sqrt(finite[m] - c);
  // Branch rule: the lifted leg leaves at angle theta, one of theta'/2 and theta'/2 + 1/2.
  cplx target = unit(angle);
  cplx z = std::abs(s / std::abs(s) - target) <= std::abs(-s / std::abs(s) - target) ? s : -s;
  std::vector<cplx> lifted{z};
  const std::size_t stop = to_critical ? 1 : 0;
  for (std::size_t k = m; k > stop; --k) lift_segment(c, finite[k], finite[k - 1], lifted.back(), opts, lifted);
  if (to_critical) {
    lifted.push_back(0.0);
  } else if (std::abs(std::sqrt(finite[0] - c)) < 0.5e-12) {
    throw NumericError("pinching: two marked points collide at the critical point");
  }
  std::reverse(lifted.begin(), lifted.end());
  return lifted;
}

}  // namespace detail

/// Standard start: x_i on the unit circle at angle theta_i with radial legs.
inline SpiderState spider_start(const OrbitPortrait& pt, const SpiderOptions& opts = {}) {
  SpiderState s;
  for (int i = 0; i < pt.marked_count(); ++i) {
    cplx x = detail::unit(pt.angle(i));
    s.points.push_back(x);
    s.legs.push_back(detail::make_leg(detail::radial_tail(x, pt.angle(i), opts.radius)));
  }
  s.c = s.points[0];
  return s;
}

/// Start at parameter c: x_0 = c and x_i = f_c^i(c) while these stay apart; points
/// that would collide are put on the unit circle at their angle. Legs are straight
/// to the radial circle.
inline SpiderState spider_start(const OrbitPortrait& pt, cplx c, const SpiderOptions& opts = {}) {
  SpiderState s;
  s.c = c;
  cplx x = c;
  for (int i = 0; i < pt.marked_count(); ++i) {
    cplx candidate = i == 0 ? c : x;
    bool collides = false;
    for (cplx y : s.points) collides = collides || std::abs(y - candidate) < 1e-6;
    if (collides) candidate = detail::unit(pt.angle(i));
    s.points.push_back(candidate);
    cplx far = opts.radius * detail::unit(pt.angle(i));
    std::vector<cplx> leg;
    const int pieces = 64;
    for (int k = 0; k <= pieces; ++k) leg.push_back(candidate + (far - candidate) * (static_cast<double>(k) / pieces));
    s.legs.push_back(detail::make_leg(leg));
    x = x * x + c;
  }
  return s;
}

/// One pullback: the leg of x_succ(i) lifts through z^2 + c to the leg of x_i, on the
/// branch leaving at angle theta_i. The new parameter is the new x_0.
inline SpiderState spider_step(const OrbitPortrait& pt, const SpiderState& s, const SpiderOptions& opts = {}) {
  SpiderState next;
  next.iteration = s.iteration + 1;
  const int n = pt.marked_count();
  for (int i = 0; i < n; ++i) {
    const int j = pt.successor(i);
    auto finite = detail::leg_finite(s.legs[j]);
    auto lifted = detail::lift_leg(s.c, finite, pt.angle(i), j == 0, opts);
    lifted = detail::thin(lifted, opts);
    auto tail = detail::radial_tail(lifted.back(), pt.angle(i), opts.radius);
    lifted.insert(lifted.end(), tail.begin() + 1, tail.end());
    next.points.push_back(lifted.front());
    next.legs.push_back(detail::make_leg(lifted));
  }
  next.c = next.points[0];
  return next;
}

struct SpiderStep {
  int step = 0;
  cplx c;
  double delta = 0.0;
};

struct SpiderResult {
  cplx c;
  std::vector<SpiderStep> history;
  SpiderState state;
};

class SpiderDivergence : public NumericError {
 public:
  SpiderDivergence(const std::string& what, std::vector<SpiderStep> history)
      : NumericError(what), history_(std::move(history)) {}
  const std::vector<SpiderStep>& history() const { return history_; }

 private:
  std::vector<SpiderStep> history_;
};

inline SpiderResult spider_solve(const OrbitPortrait& pt, double tol, int max_iter, const SpiderOptions& opts = {}) {
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  SpiderResult res;
  SpiderState s = spider_start(pt, opts);
  for (int it = 1; it <= max_iter; ++it) {
    SpiderState nx = spider_step(pt, s, opts);
    double delta = std::abs(nx.c - s.c);
    res.history.push_back({it, nx.c, delta});
    s = std::move(nx);
    if (delta < tol) {
      res.c = s.c;
      res.state = std::move(s);
      return res;
    }
  }
  std::ostringstream msg;
  msg << "spider did not converge in " << max_iter << " steps; last deltas";
  for (std::size_t i = res.history.size() > 5 ? res.history.size() - 5 : 0; i < res.history.size(); ++i)
    msg << ' ' << res.history[i].delta;
  throw SpiderDivergence(msg.str(), res.history);
}

/// True when no two legs meet away from infinity.
inline bool legs_disjoint(const SpiderState& s) {
  for (std::size_t a = 0; a < s.legs.size(); ++a) {
    auto pa = detail::leg_finite(s.legs[a]);
    for (std::size_t b = a + 1; b < s.legs.size(); ++b) {
      auto pb = detail::leg_finite(s.legs[b]);
      for (std::size_t i = 0; i + 1 < pa.size(); ++i)
        for (std::size_t j = 0; j + 1 < pb.size(); ++j)
          if (planar_segment_intersection(pa[i], pa[i + 1], pb[j], pb[j + 1])) return false;
    }
  }
  return true;
}

}  // namespace reglue
