#pragma once

// Riemann sphere primitives: points, the chordal metric, Moebius maps,
// quadratic equations on the sphere and degree-2 rational maps.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "reglue/errors.hpp"

namespace reglue {

using cplx = std::complex<double>;

/// Complex quotient n/d computed as n*conj(d)/|d|^2 after power-of-two scaling,
/// so that n/n is exactly 1 and real ratios stay real.
inline cplx divide(cplx n, cplx d) {
  double m = std::max(std::abs(d.real()), std::abs(d.imag()));
  int e = std::ilogb(m);
  cplx ds(std::scalbn(d.real(), -e), std::scalbn(d.imag(), -e));
  cplx ns(std::scalbn(n.real(), -e), std::scalbn(n.imag(), -e));
  double den = ds.real() * ds.real() + ds.imag() * ds.imag();
  return {(ns.real() * ds.real() + ns.imag() * ds.imag()) / den, (ns.imag() * ds.real() - ns.real() * ds.imag()) / den};
}

/// Above this modulus a finite value is handled in the 1/z chart.
inline constexpr double kChartSwitchModulus = 1e6;

class SpherePoint {
 public:
  constexpr SpherePoint() = default;
  constexpr SpherePoint(cplx z) : z_(z) {}  // NOLINT: implicit on purpose
  constexpr SpherePoint(double x) : z_(x, 0.0) {}  // NOLINT

  static constexpr SpherePoint infinity() {
    SpherePoint p;
    p.inf_ = true;
    return p;
  }

  /// Builds a point from a possibly overflowing complex value.
  static SpherePoint from_value(cplx z) {
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return infinity();
    return SpherePoint(z);
  }

  constexpr bool is_infinity() const { return inf_; }
  constexpr bool is_finite() const { return !inf_; }
  /// Finite value; meaningless for infinity.
  constexpr cplx value() const { return z_; }

  /// 1/p on the sphere.
  SpherePoint reciprocal() const {
    if (inf_) return SpherePoint(cplx(0.0, 0.0));
    if (z_ == cplx(0.0, 0.0)) return infinity();
    return from_value(1.0 / z_);
  }

  friend bool operator==(const SpherePoint& a, const SpherePoint& b) {
    if (a.inf_ || b.inf_) return a.inf_ == b.inf_;
    return a.z_ == b.z_;
  }

  std::string to_string() const {
    if (inf_) return "inf";
    char buf[96];
    std::snprintf(buf, sizeof buf, "%.17g%+.17gi", z_.real(), z_.imag());
    return buf;
  }

 private:
  cplx z_{0.0, 0.0};
  bool inf_ = false;
};

/// Total order used for deterministic output: lexicographic on (re, im), infinity last.
inline bool lex_less(const SpherePoint& a, const SpherePoint& b) {
  if (a.is_infinity()) return false;
  if (b.is_infinity()) return true;
  if (a.value().real() != b.value().real()) return a.value().real() < b.value().real();
  return a.value().imag() < b.value().imag();
}

/// 2|p - q| / sqrt((1+|p|^2)(1+|q|^2)), extended continuously to infinity.
inline double chordal_distance(const SpherePoint& p, const SpherePoint& q) {
  if (p.is_infinity() && q.is_infinity()) return 0.0;
  if (p.is_infinity()) return 2.0 / std::sqrt(1.0 + std::norm(q.value()));
  if (q.is_infinity()) return 2.0 / std::sqrt(1.0 + std::norm(p.value()));
  cplx a = p.value();
  cplx b = q.value();
  double ra = std::abs(a);
  double rb = std::abs(b);
  // The metric is invariant under z -> 1/z; use it to keep |.|^2 bounded.
  if (ra > 1.0 && rb > 1.0) {
    a = 1.0 / a;
    b = 1.0 / b;
    ra = std::abs(a);
    rb = std::abs(b);
  }
  if (ra > 1.0) {
    // 2|1 - b/a| / sqrt((1 + 1/|a|^2)(1 + |b|^2))
    double inv = 1.0 / ra;
    return std::min(2.0, 2.0 * std::abs(1.0 - b / a) / std::sqrt((1.0 + inv * inv) * (1.0 + rb * rb)));
  }
  if (rb > 1.0) {
    double inv = 1.0 / rb;
    return std::min(2.0, 2.0 * std::abs(1.0 - a / b) / std::sqrt((1.0 + inv * inv) * (1.0 + ra * ra)));
  }
  return std::min(2.0, 2.0 * std::abs(a - b) / std::sqrt((1.0 + ra * ra) * (1.0 + rb * rb)));
}

// ---------------------------------------------------------------------------
// Charts. Plane: zeta = z. Inverted: zeta = 1/z.

enum class Chart { Plane, Inverted };

/// The chart in which p has |zeta| <= 1.
inline Chart natural_chart(const SpherePoint& p) {
  if (p.is_infinity() || std::abs(p.value()) > 1.0) return Chart::Inverted;
  return Chart::Plane;
}

inline cplx to_chart(const SpherePoint& p, Chart chart) {
  if (chart == Chart::Plane) {
    if (p.is_infinity()) throw DomainError("point at infinity has no plane coordinate");
    return p.value();
  }
  if (p.is_infinity()) return {0.0, 0.0};
  if (p.value() == cplx(0.0, 0.0)) throw DomainError("zero has no inverted-chart coordinate");
  return 1.0 / p.value();
}

inline SpherePoint from_chart(cplx zeta, Chart chart) {
  if (chart == Chart::Plane) return SpherePoint::from_value(zeta);
  return SpherePoint::from_value(zeta).reciprocal();
}

// ---------------------------------------------------------------------------

class MobiusTransformation {
 public:
  MobiusTransformation(cplx a, cplx b, cplx c, cplx d) : a_(a), b_(b), c_(c), d_(d) {
    double scale = std::max({std::abs(a), std::abs(b), std::abs(c), std::abs(d)});
    if (!(std::abs(a * d - b * c) > 1e-14 * scale * scale)) {
      throw DomainError("degenerate Moebius transformation (ad - bc = 0)");
    }
  }

  static MobiusTransformation identity() { return {1.0, 0.0, 0.0, 1.0}; }

  cplx a() const { return a_; }
  cplx b() const { return b_; }
  cplx c() const { return c_; }
  cplx d() const { return d_; }
  cplx determinant() const { return a_ * d_ - b_ * c_; }

  SpherePoint operator()(const SpherePoint& p) const {
    cplx num;
    cplx den;
    if (p.is_infinity()) {
      num = a_;
      den = c_;
    } else if (std::abs(p.value()) > kChartSwitchModulus) {
      cplx w = 1.0 / p.value();
      num = a_ + b_ * w;
      den = c_ + d_ * w;
    } else {
      num = a_ * p.value() + b_;
      den = c_ * p.value() + d_;
    }
    if (den == cplx(0.0, 0.0)) return SpherePoint::infinity();
    return SpherePoint::from_value(divide(num, den));
  }

  /// (this o other)(z) = this(other(z)).
  MobiusTransformation compose(const MobiusTransformation& o) const {
    return {a_ * o.a_ + b_ * o.c_, a_ * o.b_ + b_ * o.d_, c_ * o.a_ + d_ * o.c_, c_ * o.b_ + d_ * o.d_};
  }

  MobiusTransformation inverse() const { return {d_, -b_, -c_, a_}; }

  /// Scaled to determinant 1 (sign fixed by the principal square root).
  MobiusTransformation normalized() const {
    cplx s = std::sqrt(determinant());
    return {a_ / s, b_ / s, c_ / s, d_ / s};
  }

 private:
  cplx a_, b_, c_, d_;
};

// ---------------------------------------------------------------------------

/// Roots on the sphere of a z^2 + b z + c, ordered by lex_less.
inline std::array<SpherePoint, 2> solve_quadratic(cplx a, cplx b, cplx c) {
  const cplx zero(0.0, 0.0);
  if (a == zero && b == zero && c == zero) throw DomainError("degenerate equation");
  std::array<SpherePoint, 2> r;
  if (a == zero) {
    // Homogeneous degree 2: missing leading terms are roots at infinity.
    r[1] = SpherePoint::infinity();
    r[0] = (b == zero) ? SpherePoint::infinity() : SpherePoint::from_value(-divide(c, b));
  } else {
    cplx sq = std::sqrt(b * b - 4.0 * a * c);
    if ((std::conj(b) * sq).real() < 0.0) sq = -sq;
    cplx q = -0.5 * (b + sq);
    if (q == zero) {
      r[0] = SpherePoint(zero);
      r[1] = SpherePoint(zero);
    } else {
      r[0] = SpherePoint::from_value(divide(q, a));
      r[1] = SpherePoint::from_value(divide(c, q));
    }
  }
  if (lex_less(r[1], r[0])) std::swap(r[0], r[1]);
  return r;
}

// ---------------------------------------------------------------------------

/// Coefficients of c0 + c1 z + c2 z^2, read homogeneously as c2 X^2 + c1 XY + c0 Y^2.
struct QuadraticForm {
  std::array<cplx, 3> c{};

  /// Value at [X:Y].
  cplx eval(cplx x, cplx y) const { return c[2] * x * x + c[1] * x * y + c[0] * y * y; }
  /// Value in a chart: Plane [zeta:1], Inverted [1:zeta].
  cplx eval_chart(cplx zeta, Chart chart) const {
    return chart == Chart::Plane ? eval(zeta, 1.0) : eval(1.0, zeta);
  }
  /// d/dzeta of eval_chart.
  cplx deriv_chart(cplx zeta, Chart chart) const {
    return chart == Chart::Plane ? 2.0 * c[2] * zeta + c[1] : c[1] + 2.0 * c[0] * zeta;
  }
  double max_abs() const { return std::max({std::abs(c[0]), std::abs(c[1]), std::abs(c[2])}); }

  /// Q(alpha X + beta Y, gamma X + delta Y).
  QuadraticForm substitute(cplx alpha, cplx beta, cplx gamma, cplx delta) const {
    QuadraticForm out;
    out.c[2] = c[2] * alpha * alpha + c[1] * alpha * gamma + c[0] * gamma * gamma;
    out.c[1] = c[2] * 2.0 * alpha * beta + c[1] * (alpha * delta + beta * gamma) + c[0] * 2.0 * gamma * delta;
    out.c[0] = c[2] * beta * beta + c[1] * beta * delta + c[0] * delta * delta;
    return out;
  }

  friend QuadraticForm operator+(const QuadraticForm& p, const QuadraticForm& q) {
    return {{p.c[0] + q.c[0], p.c[1] + q.c[1], p.c[2] + q.c[2]}};
  }
  friend QuadraticForm operator*(cplx s, const QuadraticForm& q) { return {{s * q.c[0], s * q.c[1], s * q.c[2]}}; }
};

/// Resultant of two binary quadratic forms; zero iff they share a root on the sphere.
inline cplx resultant(const QuadraticForm& n, const QuadraticForm& d) {
  cplx t = n.c[2] * d.c[0] - n.c[0] * d.c[2];
  return t * t - (n.c[2] * d.c[1] - n.c[1] * d.c[2]) * (n.c[1] * d.c[0] - n.c[0] * d.c[1]);
}

/// N'D - ND' as a form; its roots on the sphere are the critical points.
inline QuadraticForm wronskian(const QuadraticForm& n, const QuadraticForm& d) {
  return {{n.c[1] * d.c[0] - n.c[0] * d.c[1], 2.0 * (n.c[2] * d.c[0] - n.c[0] * d.c[2]),
           n.c[2] * d.c[1] - n.c[1] * d.c[2]}};
}

class QuadraticRationalMap {
 public:
  /// z -> N(z)/D(z). When `periodic_hint` is given, c1 is the critical point nearest to it.
  QuadraticRationalMap(QuadraticForm numerator, QuadraticForm denominator,
                       std::optional<SpherePoint> periodic_hint = std::nullopt)
      : num_(numerator), den_(denominator) {
    double scale = std::max(num_.max_abs(), den_.max_abs());
    double r = std::abs(resultant(num_, den_));
    if (!(scale > 0.0) || !(r > 1e-14 * scale * scale * scale * scale)) {
      throw DomainError("map is not of degree 2 (vanishing resultant)");
    }
    auto roots = solve_quadratic(wronskian(num_, den_).c[2], wronskian(num_, den_).c[1],
                                 wronskian(num_, den_).c[0]);
    crit_ = roots;
    if (periodic_hint && chordal_distance(crit_[1], *periodic_hint) < chordal_distance(crit_[0], *periodic_hint)) {
      std::swap(crit_[0], crit_[1]);
    }
  }

  const QuadraticForm& numerator() const { return num_; }
  const QuadraticForm& denominator() const { return den_; }

  /// Marked critical points (c1, c2).
  const std::array<SpherePoint, 2>& critical_points() const { return crit_; }
  SpherePoint c1() const { return crit_[0]; }
  SpherePoint c2() const { return crit_[1]; }

  SpherePoint operator()(const SpherePoint& p) const { return evaluate(p); }

  SpherePoint evaluate(const SpherePoint& p) const {
    Chart chart = (p.is_infinity() || std::abs(p.value()) > kChartSwitchModulus) ? Chart::Inverted : Chart::Plane;
    cplx zeta = p.is_infinity() ? cplx(0.0, 0.0) : (chart == Chart::Plane ? p.value() : 1.0 / p.value());
    cplx n = num_.eval_chart(zeta, chart);
    cplx d = den_.eval_chart(zeta, chart);
    if (d == cplx(0.0, 0.0)) {
      if (n == cplx(0.0, 0.0)) throw NumericError("indeterminate: map not in lowest terms");
      return SpherePoint::infinity();
    }
    return SpherePoint::from_value(divide(n, d));
  }

  /// Derivative of chart_out o f o chart_in^{-1} at chart_in(p).
  cplx chart_derivative(const SpherePoint& p, Chart in, Chart out) const {
    cplx zeta = to_chart(p, in);
    cplx n = num_.eval_chart(zeta, in);
    cplx d = den_.eval_chart(zeta, in);
    cplx dn = num_.deriv_chart(zeta, in);
    cplx dd = den_.deriv_chart(zeta, in);
    if (out == Chart::Inverted) {
      std::swap(n, d);
      std::swap(dn, dd);
    }
    if (d == cplx(0.0, 0.0)) throw DomainError("chart does not contain the image point");
    return (dn * d - n * dd) / (d * d);
  }

  /// Solutions of f(z) = w with multiplicity, ordered by lex_less.
  std::array<SpherePoint, 2> preimages(const SpherePoint& w) const {
    if (w.is_infinity()) return solve_quadratic(den_.c[2], den_.c[1], den_.c[0]);
    cplx v = w.value();
    if (std::abs(v) > kChartSwitchModulus) {
      cplx u = 1.0 / v;  // D - u N = 0
      return solve_quadratic(den_.c[2] - u * num_.c[2], den_.c[1] - u * num_.c[1], den_.c[0] - u * num_.c[0]);
    }
    return solve_quadratic(num_.c[2] - v * den_.c[2], num_.c[1] - v * den_.c[1], num_.c[0] - v * den_.c[0]);
  }

  /// M o f o M^{-1}, with marked critical points transported by M.
  QuadraticRationalMap conjugate(const MobiusTransformation& m) const {
    MobiusTransformation inv = m.inverse();
    // M^{-1}[X:Y] = [d X - b Y : -c X + a Y]
    QuadraticForm n1 = num_.substitute(inv.a(), inv.b(), inv.c(), inv.d());
    QuadraticForm d1 = den_.substitute(inv.a(), inv.b(), inv.c(), inv.d());
    QuadraticForm n2 = m.a() * n1 + m.b() * d1;
    QuadraticForm d2 = m.c() * n1 + m.d() * d1;
    return QuadraticRationalMap(n2, d2, m(c1()));
  }

 private:
  QuadraticForm num_;
  QuadraticForm den_;
  std::array<SpherePoint, 2> crit_;
};

/// Critical points in marked order (c1, c2).
inline std::array<SpherePoint, 2> critical_points(const QuadraticRationalMap& m) { return m.critical_points(); }

inline SpherePoint evaluate(const QuadraticRationalMap& m, const SpherePoint& p) { return m.evaluate(p); }

inline std::array<SpherePoint, 2> preimages(const QuadraticRationalMap& m, const SpherePoint& w) {
  return m.preimages(w);
}

/// n-fold iterate.
inline SpherePoint iterate(const QuadraticRationalMap& m, SpherePoint p, int n) {
  for (int i = 0; i < n; ++i) p = m(p);
  return p;
}

/// Image of p under f^n together with the derivative of f^n between the given
/// charts at the two ends (intermediate points use their natural charts).
struct IterateDerivative {
  SpherePoint point;
  cplx derivative;
};

inline IterateDerivative iterate_with_derivative(const QuadraticRationalMap& m, SpherePoint p, int n, Chart in,
                                                 Chart out) {
  cplx deriv(1.0, 0.0);
  Chart current = in;
  for (int i = 0; i < n; ++i) {
    SpherePoint next = m(p);
    Chart next_chart = (i + 1 == n) ? out : natural_chart(next);
    deriv *= m.chart_derivative(p, current, next_chart);
    p = next;
    current = next_chart;
  }
  if (n == 0 && in != out) {
    cplx zeta = to_chart(p, in);
    deriv = -1.0 / (zeta * zeta);
  }
  return {p, deriv};
}

// ---------------------------------------------------------------------------

/// Member of the normal-form slice Per_k(0) with c1 = infinity marked periodic.
struct FamilyMember {
  int k;
  cplx parameter;
  QuadraticRationalMap map;
};

inline QuadraticRationalMap quadratic_polynomial(cplx c) {
  return QuadraticRationalMap(QuadraticForm{{c, 0.0, 1.0}}, QuadraticForm{{1.0, 0.0, 0.0}}, SpherePoint::infinity());
}

/// k = 1: z^2 + c.  k = 2: a / (z^2 + 2z), whose critical point infinity has period 2.
inline FamilyMember family_member(int k, cplx parameter) {
  if (k == 1) return {1, parameter, quadratic_polynomial(parameter)};
  if (k == 2) {
    if (parameter == cplx(0.0, 0.0)) throw DomainError("degenerate parameter");
    return {2, parameter,
            QuadraticRationalMap(QuadraticForm{{parameter, 0.0, 0.0}}, QuadraticForm{{0.0, 2.0, 1.0}},
                                 SpherePoint::infinity())};
  }
  throw DomainError("period not implemented");
}

/// Critical value of the free critical point.
inline SpherePoint free_critical_value(const QuadraticRationalMap& m) { return m(m.c2()); }

}  // namespace reglue
