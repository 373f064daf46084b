#pragma once

// Boettcher coordinates at super-attracting cycle points and internal or
// external rays traced by predictor-corrector continuation.
//
// At a cycle point p of period k the k-th iterate reads g(u) = u^2 + O(u^3) in
// the local coordinate u = lambda * zeta, where zeta is z - p (finite p) or
// 1/z (p = infinity). phi(u) = u * prod (u_{n+1} / u_n^2)^(1 / 2^(n+1)).
// A ray of angle theta at potential t solves phi(u(f^(pre + k j)(z))) =
// (t e^{2 pi i s theta})^(2^j) with j the least integer making the right side
// small enough; s = -1 at infinity so that angles are the usual external angles.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "reglue/classify.hpp"
#include "reglue/cuts.hpp"
#include "reglue/sphere.hpp"

namespace reglue {

struct BoettcherData {
  /// Map in local position: p moved to 0 (finite p) or left at infinity.
  QuadraticRationalMap local_map;
  /// Moves p to 0 (identity when p is infinity).
  MobiusTransformation to_local;
  SpherePoint point;
  int k = 1;
  Chart chart = Chart::Plane;
  cplx lambda{1.0, 0.0};
  /// |u| <= valid_radius is inside the region where the product formula is trusted.
  double valid_radius = 0.0;
  /// Potentials at most this are inverted directly.
  double direct_potential = 0.0;
  /// -1 at infinity: external angle theta sits at chart angle -theta.
  int orientation = 1;
  /// f^k in the local chart as P(zeta)/Q(zeta), P divisible by zeta^2 exactly.
  std::vector<cplx> series_num;
  std::vector<cplx> series_den;
};

namespace detail {

inline double two_pi() { return 2.0 * std::numbers::pi; }

/// Local coordinate u of a point already in local position, or nullopt off chart.
inline std::optional<cplx> local_u(const BoettcherData& bd, const SpherePoint& w) {
  if (bd.chart == Chart::Plane) {
    if (w.is_infinity()) return std::nullopt;
    return bd.lambda * w.value();
  }
  if (w.is_finite() && w.value() == cplx(0.0, 0.0)) return std::nullopt;
  return bd.lambda * to_chart(w, Chart::Inverted);
}

inline SpherePoint from_u(const BoettcherData& bd, cplx u) { return from_chart(u / bd.lambda, bd.chart); }

inline SpherePoint iterate_local(const BoettcherData& bd, SpherePoint w, int n) {
  for (int i = 0; i < n; ++i) w = bd.local_map(w);
  return w;
}

using Poly = std::vector<cplx>;

inline Poly poly_mul(const Poly& a, const Poly& b) {
  Poly r(a.size() + b.size() - 1, cplx(0.0, 0.0));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) r[i + j] += a[i] * b[j];
  return r;
}

inline Poly poly_add(Poly a, const Poly& b) {
  if (a.size() < b.size()) a.resize(b.size(), cplx(0.0, 0.0));
  for (std::size_t i = 0; i < b.size(); ++i) a[i] += b[i];
  return a;
}

inline Poly poly_scale(Poly a, cplx s) {
  for (auto& c : a) c *= s;
  return a;
}

inline cplx poly_eval(const Poly& p, cplx x) {
  cplx r(0.0, 0.0);
  for (auto it = p.rbegin(); it != p.rend(); ++it) r = r * x + *it;
  return r;
}

/// Homogeneous forms (coefficient i multiplies X^i Y^(d-i)) of the k-th iterate.
inline std::pair<Poly, Poly> iterate_forms(const QuadraticRationalMap& m, int k) {
  Poly n{cplx(0.0, 0.0), cplx(1.0, 0.0)}, d{cplx(1.0, 0.0), cplx(0.0, 0.0)};
  const auto& N = m.numerator().c;
  const auto& D = m.denominator().c;
  for (int i = 0; i < k; ++i) {
    Poly nn = poly_mul(n, n), nd = poly_mul(n, d), dd = poly_mul(d, d);
    Poly n2 = poly_add(poly_add(poly_scale(nn, N[2]), poly_scale(nd, N[1])), poly_scale(dd, N[0]));
    Poly d2 = poly_add(poly_add(poly_scale(nn, D[2]), poly_scale(nd, D[1])), poly_scale(dd, D[0]));
    n = std::move(n2);
    d = std::move(d2);
  }
  return {n, d};
}

/// g(zeta) = f^k in the local chart, evaluated from the series.
inline cplx local_step(const BoettcherData& bd, cplx zeta) {
  return poly_eval(bd.series_num, zeta) / poly_eval(bd.series_den, zeta);
}

/// u after one application of f^k, from the series.
inline std::optional<cplx> next_u(const BoettcherData& bd, cplx u) {
  cplx r = bd.lambda * local_step(bd, u / bd.lambda);
  if (!std::isfinite(r.real()) || !std::isfinite(r.imag())) return std::nullopt;
  return r;
}

/// phi(u) by the product formula; nullopt when the orbit leaves the trusted region.
inline std::optional<cplx> phi_of_u(const BoettcherData& bd, cplx u, double trust = 0.0) {
  if (u == cplx(0.0, 0.0)) return u;
  const double limit = trust > 0.0 ? trust : bd.valid_radius;
  cplx result = u;
  cplx un = u;
  double weight = 0.5;
  for (int n = 0; n < 64; ++n) {
    auto next = next_u(bd, un);
    if (!next) return std::nullopt;
    if (*next == cplx(0.0, 0.0)) break;
    cplx ratio = *next / (un * un);
    if (!(std::abs(ratio - 1.0) < 0.9) || std::abs(*next) > limit) return std::nullopt;
    result *= std::pow(ratio, weight);
    if (std::abs(ratio - 1.0) * weight < 1e-18) break;
    un = *next;
    weight *= 0.5;
  }
  return result;
}

/// phi'(u) by a central difference.
inline cplx phi_derivative(const BoettcherData& bd, cplx u) {
  double h = 1e-6 * std::max(std::abs(u), 1e-12);
  auto a = phi_of_u(bd, u + h, 2.0 * bd.valid_radius);
  auto b = phi_of_u(bd, u - h, 2.0 * bd.valid_radius);
  auto c = phi_of_u(bd, u + cplx(0.0, h), 2.0 * bd.valid_radius);
  auto d = phi_of_u(bd, u - cplx(0.0, h), 2.0 * bd.valid_radius);
  if (!a || !b || !c || !d) return 1.0;
  cplx dx = (*a - *b) / (2.0 * h);
  cplx dy = (*c - *d) / (2.0 * h);
  return 0.5 * (dx - cplx(0.0, 1.0) * dy);
}

/// max |phi(f^k(z)) - phi(z)^2| over rings of radius up to r_outer in u, restricted to
/// samples with |phi(z)| < 0.5.
inline double equation_defect(const BoettcherData& bd, double r_outer, int rings, int per_ring) {
  double worst = 0.0;
  for (int i = 1; i <= rings; ++i) {
    double r = r_outer * i / rings;
    for (int j = 0; j < per_ring; ++j) {
      cplx u = std::polar(r, two_pi() * (j + 0.25 * i) / per_ring);
      auto p0 = phi_of_u(bd, u, 2.0 * r_outer);
      if (!p0 || std::abs(*p0) >= 0.5) continue;
      auto u1 = local_u(bd, iterate_local(bd, from_u(bd, u), bd.k));
      if (!u1) return 2.0;
      auto p1 = phi_of_u(bd, *u1, 2.0 * r_outer);
      if (!p1) return 2.0;
      worst = std::max(worst, std::abs(*p1 - *p0 * *p0));
    }
  }
  return worst;
}

}  // namespace detail

/// Boettcher data at `cycle_point`, a super-attracting point of f^k of local degree 2.
inline BoettcherData boettcher(const QuadraticRationalMap& m, const SpherePoint& cycle_point, int k) {
  if (k < 1) throw DomainError("period must be positive");
  if (chordal_distance(iterate(m, cycle_point, k), cycle_point) > 1e-12) {
    throw DomainError("point is not periodic with the given period");
  }
  MobiusTransformation t = MobiusTransformation::identity();
  if (cycle_point.is_finite()) t = MobiusTransformation(1.0, -cycle_point.value(), 0.0, 1.0);
  BoettcherData bd{m.conjugate(t), t, cycle_point, k, cycle_point.is_finite() ? Chart::Plane : Chart::Inverted,
                   1.0, 0.0, 0.0, cycle_point.is_finite() ? 1 : -1, {}, {}};
  auto [fn, fd] = detail::iterate_forms(bd.local_map, k);
  const std::size_t deg = fn.size() - 1;
  detail::Poly p(deg + 1), q(deg + 1);
  for (std::size_t i = 0; i <= deg; ++i) {
    if (bd.chart == Chart::Plane) {
      p[i] = fn[i];
      q[i] = fd[i];
    } else {
      // zeta = 1/z: [1 : zeta] maps to chart value D/N.
      p[deg - i] = fd[i];
      q[deg - i] = fn[i];
    }
  }
  double scale = 0.0;
  for (const auto& c : p) scale = std::max(scale, std::abs(c));
  for (const auto& c : q) scale = std::max(scale, std::abs(c));
  if (std::abs(q[0]) < 1e-12 * scale) throw DomainError("point is not periodic with the given period");
  if (std::abs(p[0]) > 1e-9 * scale) throw DomainError("point is not periodic with the given period");
  if (std::abs(p[1]) > 1e-9 * scale) throw DomainError("point is not super-attracting");
  p[0] = p[1] = cplx(0.0, 0.0);
  cplx lam = p[2] / q[0];
  if (!(std::abs(lam) > 1e-12 * scale / std::abs(q[0]))) throw DomainError("local degree is not 2");
  bd.series_num = p;
  bd.series_den = q;
  bd.lambda = lam;
  // Largest radius 2^-j (in u) where the orbit contracts and the functional equation holds
  // against the iterate evaluated on the sphere.
  for (double r = 0.5; r > 1e-6; r *= 0.5) {
    bd.valid_radius = 2.0 * r;
    bool ok = true;
    for (int i = 0; i < 32 && ok; ++i) {
      cplx u = std::polar(r, detail::two_pi() * (i + 0.5) / 32);
      cplx un = u;
      for (int n = 0; n < 8 && ok; ++n) {
        auto next = detail::next_u(bd, un);
        if (!next || std::abs(*next) > 0.75 * std::abs(un)) ok = false;
        else un = *next;
        if (ok && std::abs(un) < 1e-100) break;
      }
      if (!ok) break;
      auto p0 = detail::phi_of_u(bd, u);
      if (!p0 || std::abs(*p0 / u - 1.0) > 0.5) ok = false;
    }
    // Past the critical level the square-root branches of the product formula go
    // wrong; a radial margin and dense angles catch it.
    if (ok && detail::equation_defect(bd, 1.25 * r, 10, 64) > 1e-10) ok = false;
    if (ok) {
      bd.valid_radius = r;
      bd.direct_potential = 0.5 * r;
      return bd;
    }
  }
  throw NumericError("no valid Boettcher disk found");
}

/// phi at a point in original coordinates (nullopt outside the trusted disk).
inline std::optional<cplx> boettcher_phi(const BoettcherData& bd, const SpherePoint& z) {
  auto u = detail::local_u(bd, bd.to_local(z));
  if (!u || std::abs(*u) > bd.valid_radius) return std::nullopt;
  return detail::phi_of_u(bd, *u);
}

/// max |phi(f^k(z)) - phi(z)^2| over sample points with |phi(z)| < 0.5 inside the valid disk.
inline double boettcher_residual(const BoettcherData& bd, int rings = 8, int per_ring = 32) {
  return detail::equation_defect(bd, bd.valid_radius, rings, per_ring);
}

// ---------------------------------------------------------------------------
// Ray continuation

/// Component coordinate psi = phi o f^pre, valid on the Fatou component
/// reached by continuation from a seed point.
struct RayFrame {
  BoettcherData bd;
  int pre = 0;
};

struct RayPoint {
  double potential = 0.0;
  double angle = 0.0;
  SpherePoint z;
};

namespace detail {

inline int lift_count(const BoettcherData& bd, double t) {
  int j = 0;
  double s = t;
  while (s > bd.direct_potential && j < 60) {
    s *= s;
    ++j;
  }
  if (j >= 60) throw NumericError("potential too close to the boundary");
  return j;
}

inline cplx ray_target(const BoettcherData& bd, double t, double angle, int j) {
  double a = std::ldexp(angle, j);
  a -= std::floor(a);
  return std::polar(std::pow(t, std::ldexp(1.0, j)), two_pi() * bd.orientation * a);
}

/// Newton for phi(u(f^(pre + k j)(z))) = target from `guess`. When `spacing` is
/// set it receives the chordal distance to the neighbouring solutions, which
/// belong to the angles differing by multiples of 2^-j.
inline std::optional<SpherePoint> solve_level_point(const RayFrame& fr, int j, cplx target, SpherePoint guess,
                                                    double* spacing = nullptr) {
  const auto& bd = fr.bd;
  const int n = fr.pre + bd.k * j;
  SpherePoint z = bd.to_local(guess);
  auto residual = [&](const SpherePoint& x, cplx* value, cplx* deriv, Chart in) -> bool {
    IterateDerivative id;
    try {
      id = iterate_with_derivative(bd.local_map, x, n, in, bd.chart);
    } catch (const DomainError&) {
      return false;
    }
    auto u = local_u(bd, id.point);
    if (!u || std::abs(*u) > 2.0 * bd.valid_radius) return false;
    auto ph = phi_of_u(bd, *u, 2.0 * bd.valid_radius);
    if (!ph) return false;
    *value = *ph - target;
    if (deriv) *deriv = phi_derivative(bd, *u) * bd.lambda * id.derivative;
    return true;
  };
  auto finish = [&]() -> std::optional<SpherePoint> {
    if (spacing) {
      Chart in = natural_chart(z);
      cplx val, der;
      if (!residual(z, &val, &der, in) || std::abs(der) == 0.0) return std::nullopt;
      cplx zeta = to_chart(z, in);
      *spacing = two_pi() * std::abs(target) / std::abs(der) * 2.0 / (1.0 + std::norm(zeta));
    }
    return bd.to_local.inverse()(z);
  };
  bool stalled = false;
  for (int it = 0; it < 40; ++it) {
    Chart in = natural_chart(z);
    cplx val, der;
    if (!residual(z, &val, &der, in)) return std::nullopt;
    if (std::abs(val) <= 1e-14 * std::abs(target) + 1e-300) return finish();
    cplx step = val / der;
    if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) return std::nullopt;
    cplx zeta = to_chart(z, in);
    // Damped update: shrink until the residual decreases.
    bool moved = false;
    for (int d = 0; d < 12; ++d) {
      SpherePoint cand = from_chart(zeta - step, in);
      cplx v2;
      if (residual(cand, &v2, nullptr, natural_chart(cand)) && std::abs(v2) < std::abs(val)) {
        z = cand;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved || std::abs(step) <= 1e-15 * std::max(1.0, std::abs(zeta))) {
      // Stalled at the conditioning limit of the lifted equation.
      stalled = std::abs(step) <= 1e-13 * std::max(1e-3, std::abs(zeta));
      break;
    }
  }
  cplx val;
  if (residual(z, &val, nullptr, natural_chart(z)) &&
      std::abs(val) <= (stalled ? 1e-6 : 1e-11) * std::abs(target)) {
    return finish();
  }
  return std::nullopt;
}

inline std::optional<SpherePoint> solve_ray_point(const RayFrame& fr, double t, double angle, SpherePoint guess,
                                                  double* spacing = nullptr) {
  int j = lift_count(fr.bd, t);
  return solve_level_point(fr, j, ray_target(fr.bd, t, angle, j), guess, spacing);
}

/// phi(u(f^(pre + k j)(z))) when it lies in the direct region, else nullopt.
inline std::optional<cplx> lifted_phi(const RayFrame& fr, const SpherePoint& z, int j) {
  const auto& bd = fr.bd;
  SpherePoint w = iterate_local(bd, bd.to_local(z), fr.pre + bd.k * j);
  auto u = local_u(bd, w);
  if (!u || std::abs(*u) > bd.valid_radius) return std::nullopt;
  return phi_of_u(bd, *u);
}

}  // namespace detail

struct ContinuationOptions {
  double max_edge = kDefaultMaxEdge;
  double min_step = 1e-12;
};

/// Continues a ray point linearly in (potential, angle) from `from` to (t1, a1).
/// Returns every accepted point after `from`.
inline std::vector<RayPoint> continue_ray(const RayFrame& fr, const RayPoint& from, double t1, double a1,
                                          const ContinuationOptions& opts = {}) {
  std::vector<RayPoint> out;
  RayPoint cur = from;
  std::optional<RayPoint> prev;
  double s = 0.0, ds = 1.0;
  const double t0 = from.potential, a0 = from.angle;
  while (s < 1.0) {
    double s1 = std::min(1.0, s + ds);
    double t = t0 + s1 * (t1 - t0), a = a0 + s1 * (a1 - a0);
    // Predictor: linear extrapolation in the chart of the current point.
    SpherePoint guess = cur.z;
    if (prev && prev->potential != cur.potential) {
      Chart ch = natural_chart(cur.z);
      try {
        cplx zc = to_chart(cur.z, ch), zp = to_chart(prev->z, ch);
        double frac = (t - cur.potential) / (cur.potential - prev->potential);
        if (std::abs(a1 - a0) > 0 && t1 == t0) frac = (a - cur.angle) / (cur.angle - prev->angle);
        if (std::isfinite(frac) && std::abs(frac) < 4.0) guess = from_chart(zc + frac * (zc - zp), ch);
      } catch (const DomainError&) {
      }
    }
    double spacing = 0.0;
    auto z = detail::solve_ray_point(fr, t, a, guess, &spacing);
    // Newton must stay well inside the basin of its own root; neighbouring
    // angles solve the same lifted equation.
    bool ok = z && chordal_distance(*z, cur.z) <= opts.max_edge &&
              chordal_distance(*z, guess) <= 0.25 * spacing && chordal_distance(*z, cur.z) <= 0.5 * spacing;
    if (ok && prev) {
      // Reject branch jumps: the step must not reverse direction sharply.
      double back = chordal_distance(*z, prev->z);
      if (back < 0.5 * chordal_distance(cur.z, prev->z) && ds > opts.min_step * 8) ok = false;
    }
    if (!ok) {
      ds *= 0.5;
      if (ds < opts.min_step) {
        throw NumericError("ray corrector diverged; last good potential " + std::to_string(cur.potential));
      }
      continue;
    }
    prev = cur;
    cur = RayPoint{t, a, *z};
    out.push_back(cur);
    s = s1;
    ds = std::min(1.0, 2.0 * ds);
  }
  return out;
}

/// Result of following a ray of the component downwards from an arbitrary point.
struct Descent {
  /// Ray point in the direct region, with its exact angle.
  RayPoint seed;
  /// Vertices from the start point down to the seed.
  std::vector<SpherePoint> path;
};

/// Follows the ray through z0 down to the direct region of the frame, lowering
/// the lift count one level at a time so that the angle is read off exactly.
/// Fails (nullopt) when z0 is not in the component of the frame.
inline std::optional<Descent> descend(const RayFrame& fr, const SpherePoint& z0, const ContinuationOptions& opts = {}) {
  const auto& bd = fr.bd;
  int j = -1;
  cplx phi(0.0, 0.0);
  for (int jj = 0; jj < 60 && j < 0; ++jj) {
    auto ph = detail::lifted_phi(fr, z0, jj);
    if (ph && std::abs(*ph) <= bd.direct_potential) {
      j = jj;
      phi = *ph;
    }
  }
  if (j < 0) return std::nullopt;
  if (phi == cplx(0.0, 0.0)) return Descent{RayPoint{0.0, 0.0, z0}, {z0}};
  double t = std::pow(std::abs(phi), 1.0 / std::ldexp(1.0, j));
  cplx dir = phi / std::abs(phi);
  std::vector<SpherePoint> path{z0};
  SpherePoint z = z0;
  while (j > 0) {
    const double t_end = std::pow(bd.direct_potential, 1.0 / std::ldexp(1.0, j - 1));
    if (t > t_end) {
      const double l0 = std::log(t), l1 = std::log(t_end);
      double s = 0.0, ds = 1.0;
      while (s < 1.0) {
        double s1 = std::min(1.0, s + ds);
        double tt = std::exp(l0 + s1 * (l1 - l0));
        double spacing = 0.0;
        auto zn = detail::solve_level_point(fr, j, std::pow(tt, std::ldexp(1.0, j)) * dir, z, &spacing);
        if (!zn || chordal_distance(*zn, z) > std::min(opts.max_edge, 0.25 * spacing)) {
          ds *= 0.5;
          if (ds < opts.min_step) return std::nullopt;
          continue;
        }
        z = *zn;
        path.push_back(z);
        s = s1;
        ds = std::min(1.0, 2.0 * ds);
      }
      t = t_end;
    }
    auto ph = detail::lifted_phi(fr, z, j - 1);
    if (!ph) return std::nullopt;
    double expect = std::pow(t, std::ldexp(1.0, j - 1));
    if (std::abs(std::abs(*ph) - expect) > 1e-6 * expect) return std::nullopt;
    dir = *ph / std::abs(*ph);
    --j;
  }
  double a = bd.orientation * std::arg(dir) / detail::two_pi();
  a -= std::floor(a);
  return Descent{RayPoint{t, a, z}, path};
}

struct Ray {
  double angle = 0.0;
  double t0 = 0.0;
  double t1 = 0.0;
  Curve trace;
  std::vector<RayPoint> points;
  std::optional<SpherePoint> landing;
  /// Chordal gaps between the last extrapolants (landing diagnostics).
  std::vector<double> extrapolation_gaps;
};

/// Landing potentials 1 - 2^-j, j = 4..12.
inline std::vector<double> landing_potentials() {
  std::vector<double> t;
  for (int j = 4; j <= 12; ++j) t.push_back(1.0 - std::ldexp(1.0, -j));
  return t;
}

namespace detail {

/// One Aitken delta-squared pass over zs with the given index stride.
inline std::vector<SpherePoint> aitken_pass(const std::vector<SpherePoint>& zs, std::size_t stride) {
  std::vector<SpherePoint> ext;
  for (std::size_t i = 2 * stride; i < zs.size(); ++i) {
    const SpherePoint& last = zs[i];
    Chart ch = natural_chart(last);
    try {
      cplx a = to_chart(zs[i - 2 * stride], ch), b = to_chart(zs[i - stride], ch), c = to_chart(zs[i], ch);
      cplx den = (c - b) - (b - a);
      if (std::abs(den) < 1e-14 * (std::abs(c) + 1.0)) {
        ext.push_back(zs[i]);
      } else {
        ext.push_back(from_chart(c - (c - b) * (c - b) / den, ch));
      }
    } catch (const DomainError&) {
      ext.push_back(zs[i]);
    }
  }
  return ext;
}

inline std::vector<double> successive_gaps(const std::vector<SpherePoint>& zs) {
  std::vector<double> gaps;
  for (std::size_t i = 1; i < zs.size(); ++i) gaps.push_back(chordal_distance(zs[i], zs[i - 1]));
  return gaps;
}

/// Landing point from the ray points at the landing potentials. A stride-2 Aitken
/// pass absorbs the period-2 oscillation of rays landing on 2-cycles; a second
/// stride-1 pass removes the next geometric mode. The landing exists when the last
/// two gaps of the better pass are below 1e-4.
inline std::pair<std::optional<SpherePoint>, std::vector<double>> extrapolate_landing(
    const std::vector<SpherePoint>& zs) {
  auto ext = aitken_pass(zs, 2);
  auto gaps = successive_gaps(ext);
  if (gaps.size() < 2) return {std::nullopt, gaps};
  auto ext2 = aitken_pass(ext, 1);
  auto gaps2 = successive_gaps(ext2);
  if (gaps2.size() >= 2 && gaps2.back() < gaps.back()) {
    ext = std::move(ext2);
    gaps = std::move(gaps2);
  }
  bool cauchy = gaps[gaps.size() - 1] < 1e-4 && gaps[gaps.size() - 2] < 1e-4;
  if (!cauchy) return {std::nullopt, gaps};
  return {ext.back(), gaps};
}

inline Ray assemble_ray(const RayFrame& fr, double angle, const RayPoint& start, double t1, double step,
                        const ContinuationOptions& opts) {
  Ray ray;
  ray.angle = angle;
  ray.t0 = start.potential;
  ray.t1 = t1;
  ray.points.push_back(start);
  std::vector<double> stops;
  for (double t = start.potential + step; t < t1 - 1e-15; t += step) stops.push_back(t);
  auto lands = landing_potentials();
  const bool to_boundary = t1 >= lands.back();
  if (to_boundary) {
    std::erase_if(stops, [&](double t) { return t > lands.front(); });
    for (double t : lands)
      if (t <= t1 && t > start.potential) stops.push_back(t);
  } else {
    stops.push_back(t1);
  }
  std::vector<SpherePoint> at_lands;
  RayPoint cur = start;
  for (double t : stops) {
    auto pts = continue_ray(fr, cur, t, angle, opts);
    ray.points.insert(ray.points.end(), pts.begin(), pts.end());
    cur = ray.points.back();
    if (to_boundary && std::find(lands.begin(), lands.end(), t) != lands.end()) at_lands.push_back(cur.z);
  }
  for (const auto& p : ray.points) ray.trace.vertices.push_back(p.z);
  ray.trace.max_edge = opts.max_edge;
  if (to_boundary) {
    auto [land, gaps] = extrapolate_landing(at_lands);
    ray.landing = land;
    ray.extrapolation_gaps = gaps;
  }
  return ray;
}

}  // namespace detail

/// Ray of the given angle in the Boettcher disk of bd, from potential t0 to t1
/// (t1 >= 1 - 2^-12 runs through the landing potentials and extrapolates the landing point).
inline Ray trace_ray(const BoettcherData& bd, double angle, double t0, double t1, double step = 0.05,
                     const ContinuationOptions& opts = {}) {
  if (!(0.0 < t0 && t0 < t1 && t1 < 1.0)) throw DomainError("potentials must satisfy 0 < t0 < t1 < 1");
  if (!(step > 0.0)) throw DomainError("step must be positive");
  angle -= std::floor(angle);
  RayFrame fr{bd, 0};
  double ts = std::min(t0, bd.direct_potential);
  cplx target = detail::ray_target(bd, ts, angle, 0);
  // Direct inversion in the Boettcher disk; phi(u) ~ u seeds Newton.
  auto z = detail::solve_ray_point(fr, ts, angle, bd.to_local.inverse()(detail::from_u(bd, target)));
  if (!z) throw NumericError("Boettcher inversion failed");
  RayPoint start{ts, angle, *z};
  if (ts < t0) {
    auto pts = continue_ray(fr, start, t0, angle, opts);
    start = pts.back();
  }
  Ray ray = detail::assemble_ray(fr, angle, start, t1, step, opts);
  ray.t0 = t0;
  return ray;
}

/// max deviation |log psi(z) - log(t e^{2 pi i s theta})| along the ray, psi evaluated
/// through the same lift as the trace.
inline double ray_residual(const RayFrame& fr, const Ray& ray) {
  const auto& bd = fr.bd;
  double worst = 0.0;
  for (const auto& p : ray.points) {
    int j = detail::lift_count(bd, p.potential);
    SpherePoint w = detail::iterate_local(bd, bd.to_local(p.z), fr.pre + bd.k * j);
    auto u = detail::local_u(bd, w);
    if (!u) return 2.0;
    auto ph = detail::phi_of_u(bd, *u, 2.0 * bd.valid_radius);
    if (!ph) return 2.0;
    cplx target = detail::ray_target(bd, p.potential, p.angle, j);
    cplx d = std::log(*ph / target) / std::ldexp(1.0, j);
    worst = std::max(worst, std::abs(d));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// The curve beta

struct BetaResult {
  Curve curve;  // from the component center to the landing point (or to v)
  double angle = 0.0;
  int preperiod = 0;
  SpherePoint center;
  std::optional<SpherePoint> landing;
  double landing_distance = 2.0;
  Ray ray;
};

struct BetaOptions {
  int max_iter = 2000;
  double step = 0.05;
  /// Refine the probe angle by golden-section search on the distance from v to
  /// the deepest ray point.
  bool refine_angle = true;
  ContinuationOptions continuation{};
};

namespace detail {

/// First n with f^n(z) in the trusted disk of the marked cycle point (in phase), or -1.
inline int entry_time(const QuadraticRationalMap& m, const BoettcherData& bd, SpherePoint z, int max_iter) {
  for (int n = 0; n <= max_iter; ++n) {
    auto u = local_u(bd, bd.to_local(z));
    if (u && std::abs(*u) <= 0.5 * bd.valid_radius) return n;
    z = m(z);
  }
  return -1;
}

/// Least preperiod n <= max_pre for which z lies in a component mapped by f^n onto
/// the immediate component at the marked cycle point, with the descent from z.
inline std::optional<std::pair<int, Descent>> locate_component(const QuadraticRationalMap& m, const BoettcherData& bd,
                                                               const SpherePoint& z, const BetaOptions& opts,
                                                               int max_pre = std::numeric_limits<int>::max()) {
  int entry = entry_time(m, bd, z, opts.max_iter);
  if (entry < 0) return std::nullopt;
  for (int n = 0; n <= std::min(entry, max_pre); ++n) {
    auto d = descend(RayFrame{bd, n}, z, opts.continuation);
    if (d) return std::make_pair(n, *d);
  }
  return std::nullopt;
}

/// The point of the component with psi = 0: Newton on f^pre(w) = p in the local chart.
inline SpherePoint component_center(const RayFrame& fr, SpherePoint guess) {
  const auto& bd = fr.bd;
  if (fr.pre == 0) return bd.point;
  SpherePoint z = bd.to_local(guess);
  for (int it = 0; it < 60; ++it) {
    Chart in = natural_chart(z);
    IterateDerivative id;
    try {
      id = iterate_with_derivative(bd.local_map, z, fr.pre, in, bd.chart);
    } catch (const DomainError&) {
      break;
    }
    cplx g = to_chart(id.point, bd.chart);
    if (g == cplx(0.0, 0.0)) break;
    cplx step = g / id.derivative;
    z = from_chart(to_chart(z, in) - step, in);
    if (std::abs(step) < 1e-15 * std::max(1.0, std::abs(to_chart(z, in)))) break;
  }
  return bd.to_local.inverse()(z);
}

/// Ray of the component through `seed`, rotated to `angle`, traced from near the center to
/// the boundary; the returned curve starts at the component center.
inline BetaResult component_ray(const RayFrame& fr, const RayPoint& seed, double angle, const BetaOptions& opts) {
  BetaResult res;
  res.angle = angle;
  res.preperiod = fr.pre;
  double da = angle - seed.angle;
  da -= std::round(da);
  double t_low = std::min(seed.potential, 0.05);
  auto rotated = continue_ray(fr, seed, seed.potential, seed.angle + da, opts.continuation);
  RayPoint at = rotated.empty() ? seed : rotated.back();
  at.angle = angle;
  auto down = continue_ray(fr, at, t_low, angle, opts.continuation);
  RayPoint low = down.empty() ? at : down.back();
  res.ray = assemble_ray(fr, angle, low, 1.0 - std::ldexp(1.0, -12), opts.step, opts.continuation);
  res.center = component_center(fr, low.z);
  res.curve.vertices.push_back(res.center);
  // Close the gap between the center and the lowest traced potential.
  auto inner = refine_polyline({res.center, low.z}, opts.continuation.max_edge);
  res.curve.vertices.insert(res.curve.vertices.end(), inner.begin() + 1, inner.end() - 1);
  for (const auto& p : res.ray.points) res.curve.vertices.push_back(p.z);
  if (res.ray.landing) res.curve.vertices.push_back(*res.ray.landing);
  res.curve.start_tag = "preperiodic point w";
  res.curve.end_tag = "landing point";
  res.curve.max_edge = opts.continuation.max_edge;
  res.landing = res.ray.landing;
  return res;
}

}  // namespace detail

/// Marked-cycle Boettcher data of a family member (cycle point c1 = infinity).
inline BoettcherData marked_boettcher(const FamilyMember& fm) { return boettcher(fm.map, fm.map.c1(), fm.k); }

/// beta as the closure of a ray in a Fatou component of the marked-cycle basin
/// whose boundary contains the free critical value v.
/// Without an explicit angle the angle is taken from a converging probe next to v
/// and refined so that the ray passes closest to v.
inline BetaResult beta_boundary_case(const FamilyMember& fm, std::optional<double> angle = std::nullopt,
                                     const BetaOptions& opts = {}) {
  const auto& m = fm.map;
  BoettcherData bd = marked_boettcher(fm);
  SpherePoint v = free_critical_value(m);
  // Probe rings around v, smallest radius first; the least preperiod wins so that
  // tiny components accumulating at v do not shadow the component of interest.
  std::optional<RayPoint> seed;
  int pre = -1;
  for (double r : {1e-4, 3e-4, 1e-3, 3e-3, 1e-2, 3e-2}) {
    for (int i = 0; i < 64 && pre != 0; ++i) {
      cplx off = std::polar(r, detail::two_pi() * i / 64);
      SpherePoint probe = v.is_infinity() ? SpherePoint(1.0 / off) : SpherePoint(v.value() + off);
      auto found = detail::locate_component(m, bd, probe, opts, seed ? pre - 1 : std::numeric_limits<int>::max());
      if (found) {
        seed = found->second.seed;
        pre = found->first;
      }
    }
    if (seed) break;
  }
  if (!seed) throw DomainError("component identification failed: no converging probe near v");
  if (descend(RayFrame{bd, pre}, v, opts.continuation)) {
    throw DomainError("critical value lies inside a basin component, not on its boundary");
  }
  RayFrame fr{bd, pre};
  auto attempt = [&](double a) -> std::optional<BetaResult> {
    try {
      BetaResult r = detail::component_ray(fr, *seed, a, opts);
      if (r.landing) r.landing_distance = chordal_distance(*r.landing, v);
      return r;
    } catch (const NumericError&) {
      return std::nullopt;
    }
  };
  // Distance from v to the deepest traced ray point: continuous in the angle,
  // unlike the extrapolated landing.
  auto score = [&](const std::optional<BetaResult>& r) {
    return r && !r->ray.points.empty() ? chordal_distance(r->ray.points.back().z, v) : 3.0;
  };
  auto better = [&](const std::optional<BetaResult>& a, const std::optional<BetaResult>& b) {
    if (!a || !a->landing) return false;
    return !b || !b->landing || score(a) < score(b);
  };
  std::optional<BetaResult> best;
  if (angle) {
    best = attempt(*angle - std::floor(*angle));
  } else {
    best = attempt(seed->angle);
    if (opts.refine_angle) {
      // Golden-section search over a bracket around the probe angle.
      double width = 1e-2;
      double lo = seed->angle - width, hi = seed->angle + width;
      const double g = (std::sqrt(5.0) - 1.0) / 2.0;
      double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
      auto r1 = attempt(x1), r2 = attempt(x2);
      for (int it = 0; it < 40 && hi - lo > 1e-12; ++it) {
        if (score(r1) < score(r2)) {
          hi = x2;
          x2 = x1;
          r2 = r1;
          x1 = hi - g * (hi - lo);
          r1 = attempt(x1);
        } else {
          lo = x1;
          x1 = x2;
          r1 = r2;
          x2 = lo + g * (hi - lo);
          r2 = attempt(x2);
        }
        for (auto* r : {&r1, &r2})
          if (better(*r, best)) best = *r;
      }
    }
  }
  if (!best) throw NumericError("ray in the component could not be traced");
  if (!best->landing) throw NumericError("landing extrapolation diverged");
  return *best;
}

/// beta for a capture parameter: the ray of v's component from v down to its center w.
inline BetaResult beta_capture_case(const FamilyMember& fm, const BetaOptions& opts = {}) {
  const auto& m = fm.map;
  BoettcherData bd = marked_boettcher(fm);
  SpherePoint v = free_critical_value(m);
  if (detail::entry_time(m, bd, v, opts.max_iter) < 0) {
    throw DomainError("critical value is not in the basin of the marked cycle");
  }
  auto found = detail::locate_component(m, bd, v, opts);
  if (!found) throw NumericError("Boettcher coordinate of v unavailable");
  RayFrame fr{bd, found->first};
  const RayPoint seed = found->second.seed;
  BetaResult res;
  res.angle = seed.angle;
  res.preperiod = fr.pre;
  auto down = continue_ray(fr, seed, std::min(seed.potential, 0.02), seed.angle, opts.continuation);
  RayPoint low = down.empty() ? seed : down.back();
  res.center = detail::component_center(fr, low.z);
  res.curve.vertices = found->second.path;
  for (const auto& p : down) res.curve.vertices.push_back(p.z);
  auto tail = refine_polyline({low.z, res.center}, opts.continuation.max_edge);
  res.curve.vertices.insert(res.curve.vertices.end(), tail.begin() + 1, tail.end());
  res.curve.start_tag = "critical value";
  res.curve.end_tag = "preperiodic point w";
  res.curve.max_edge = opts.continuation.max_edge;
  res.landing = v;
  res.landing_distance = 0.0;
  return res;
}

/// beta oriented from v: reverses a boundary-case curve and replaces its landing end by v.
inline Curve beta_from_v(const BetaResult& r, const SpherePoint& v, double tolerance = 1e-3) {
  if (r.landing_distance > tolerance) throw NumericError("ray does not land at the critical value");
  Curve c = r.curve;
  if (c.start_tag == "critical value") return c;
  std::reverse(c.vertices.begin(), c.vertices.end());
  c.vertices.front() = v;
  std::swap(c.start_tag, c.end_tag);
  c.start_tag = "critical value";
  return c;
}

}  // namespace reglue
