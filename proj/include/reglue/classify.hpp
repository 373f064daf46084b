#pragma once

// Dynamics of the slices Per_k(0): cycle detection and multipliers, raster
// basin labeling, the capture test for the free critical orbit, Newton solvers
// for critically finite centers and the super-attracting signature.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <queue>
#include <string>
#include <unordered_map>
#include <vector>

#include "reglue/parallel.hpp"
#include "reglue/raster.hpp"
#include "reglue/sphere.hpp"

namespace reglue {

inline constexpr int kMaxPeriod = 64;
inline constexpr int kDefaultMaxIter = 10000;
/// Chordal radius of the neighbourhood that counts as "entered the cycle".
inline constexpr double kEntryRadius = 1e-3;
/// Radius the orbit must stay within while the entry is confirmed.
inline constexpr double kConfirmRadius = 1e-2;
/// Chordal tolerance for an exact landing on a critical cycle.
inline constexpr double kLandingTolerance = 1e-12;

struct Cycle {
  std::vector<SpherePoint> points;
  int period = 0;
  cplx multiplier{0.0, 0.0};
  /// Index of a critical point lying on the cycle (points[0] is then that point), or -1.
  int critical_index = -1;

  bool super_attracting() const { return critical_index >= 0; }
  bool attracting() const { return std::abs(multiplier) < 1.0; }

  double distance(const SpherePoint& p) const {
    double d = 2.0;
    for (const auto& q : points) d = std::min(d, chordal_distance(p, q));
    return d;
  }
  /// Index of the nearest cycle point.
  int nearest(const SpherePoint& p) const {
    int best = 0;
    double d = 3.0;
    for (int i = 0; i < static_cast<int>(points.size()); ++i) {
      double e = chordal_distance(p, points[i]);
      if (e < d) {
        d = e;
        best = i;
      }
    }
    return best;
  }
};

class CycleRefinementError : public NumericError {
 public:
  CycleRefinementError(const std::string& what, Cycle unrefined)
      : NumericError(what), unrefined_(std::move(unrefined)) {}
  const Cycle& unrefined() const { return unrefined_; }

 private:
  Cycle unrefined_;
};

/// Derivative of the return map along the cycle, each factor taken between
/// the natural charts of consecutive points (so no factor sees infinity).
inline cplx cycle_multiplier(const QuadraticRationalMap& m, const std::vector<SpherePoint>& points) {
  cplx mult(1.0, 0.0);
  const std::size_t p = points.size();
  for (std::size_t i = 0; i < p; ++i) {
    const SpherePoint& next = points[(i + 1) % p];
    mult *= m.chart_derivative(points[i], natural_chart(points[i]), natural_chart(next));
  }
  return mult;
}

namespace detail {

/// Newton on f^p(z) = z in the natural chart of `start`.
inline std::optional<SpherePoint> refine_periodic_point(const QuadraticRationalMap& m, SpherePoint start, int period) {
  Chart chart = natural_chart(start);
  cplx zeta = to_chart(start, chart);
  for (int it = 0; it < 60; ++it) {
    SpherePoint z = from_chart(zeta, chart);
    IterateDerivative id;
    try {
      id = iterate_with_derivative(m, z, period, chart, chart);
    } catch (const DomainError&) {
      return std::nullopt;  // left the chart
    }
    if (chart == Chart::Plane && id.point.is_infinity()) return std::nullopt;
    cplx g = to_chart(id.point, chart) - zeta;
    if (g == cplx(0.0, 0.0)) return z;
    cplx step = g / (id.derivative - 1.0);
    if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) return std::nullopt;
    zeta -= step;
    if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(zeta))) return from_chart(zeta, chart);
  }
  return std::nullopt;
}

inline Cycle assemble_cycle(const QuadraticRationalMap& m, SpherePoint start, int period) {
  // Reduce to the exact period.
  for (int d = 1; d < period; ++d) {
    if (period % d == 0 && chordal_distance(iterate(m, start, d), start) < 1e-9) {
      period = d;
      break;
    }
  }
  std::vector<SpherePoint> pts;
  pts.reserve(period);
  SpherePoint z = start;
  for (int i = 0; i < period; ++i) {
    pts.push_back(z);
    z = m(z);
  }
  // Snap onto a critical point when one lies on the cycle, and start there.
  Cycle cyc;
  for (int i = 0; i < period && cyc.critical_index < 0; ++i) {
    for (int c = 0; c < 2; ++c) {
      if (chordal_distance(pts[i], m.critical_points()[c]) < 1e-9) {
        SpherePoint w = m.critical_points()[c];
        pts.clear();
        for (int j = 0; j < period; ++j) {
          pts.push_back(w);
          w = m(w);
        }
        cyc.critical_index = c;
        break;
      }
    }
  }
  if (cyc.critical_index < 0) {
    auto it = std::min_element(pts.begin(), pts.end(), lex_less);
    std::rotate(pts.begin(), it, pts.end());
  }
  cyc.points = std::move(pts);
  cyc.period = period;
  cyc.multiplier = cycle_multiplier(m, cyc.points);
  return cyc;
}

}  // namespace detail

/// Iterates `seed`, detects a near-return of period <= 64 within `tol`
/// (chordal), and refines the cycle by Newton on the period-th iterate.
inline std::optional<Cycle> detect_cycle(const QuadraticRationalMap& m, const SpherePoint& seed,
                                         int max_iter = kDefaultMaxIter, double tol = 1e-10) {
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
  std::vector<SpherePoint> ring(kMaxPeriod + 1);
  ring[0] = seed;
  SpherePoint z = seed;
  for (int n = 1; n <= max_iter; ++n) {
    z = m(z);
    ring[n % (kMaxPeriod + 1)] = z;
    int found = 0;
    for (int p = 1; p <= kMaxPeriod && p <= n; ++p) {
      if (chordal_distance(z, ring[(n - p) % (kMaxPeriod + 1)]) < tol) {
        found = p;
        break;
      }
    }
    if (found == 0) continue;
    auto refined = detail::refine_periodic_point(m, z, found);
    if (!refined || chordal_distance(iterate(m, *refined, found), *refined) > 1e-9) {
      Cycle raw;
      raw.period = found;
      SpherePoint w = z;
      for (int i = 0; i < found; ++i) {
        raw.points.push_back(w);
        w = m(w);
      }
      throw CycleRefinementError("refinement failed", raw);
    }
    return detail::assemble_cycle(m, *refined, found);
  }
  return std::nullopt;
}

/// The marked cycle c1 -> ... of a family member (exact by construction).
inline Cycle marked_cycle(const FamilyMember& fm) {
  return detail::assemble_cycle(fm.map, fm.map.c1(), fm.k);
}

// ---------------------------------------------------------------------------
// Basin labeling

struct BasinOptions {
  int max_iter = 1000;
  double eps = kEntryRadius;
};

/// Convergence key of a point: attractor offset + entry phase, or -1.
/// Points in one Fatou component of the basin share the key.
class BasinClassifier {
 public:
  BasinClassifier(const QuadraticRationalMap& m, std::vector<Cycle> attractors, BasinOptions opts)
      : m_(m), attractors_(std::move(attractors)), opts_(opts) {
    int off = 0;
    for (const auto& c : attractors_) {
      offsets_.push_back(off);
      off += c.period;
    }
    key_count_ = off;
  }

  const std::vector<Cycle>& attractors() const { return attractors_; }
  int key_count() const { return key_count_; }

  /// Attractor index of a key.
  int attractor_of(int key) const {
    int a = 0;
    while (a + 1 < static_cast<int>(offsets_.size()) && offsets_[a + 1] <= key) ++a;
    return a;
  }

  struct Entry {
    int key = -1;
    int step = -1;
  };

  Entry classify(SpherePoint z) const {
    for (int n = 0; n <= opts_.max_iter; ++n) {
      for (int a = 0; a < static_cast<int>(attractors_.size()); ++a) {
        const Cycle& c = attractors_[a];
        for (int i = 0; i < c.period; ++i) {
          if (chordal_distance(z, c.points[i]) < opts_.eps) {
            int phase = ((i - n) % c.period + c.period) % c.period;
            return {offsets_[a] + phase, n};
          }
        }
      }
      z = m_(z);
    }
    return {};
  }

 private:
  const QuadraticRationalMap& m_;
  std::vector<Cycle> attractors_;
  BasinOptions opts_;
  std::vector<int> offsets_;
  int key_count_ = 0;
};

struct BasinRaster {
  SphereGrid grid;
  /// Component id per pixel; -1 for unconverged or non-owned pixels.
  std::vector<int> labels;
  /// Convergence key per pixel (see BasinClassifier).
  std::vector<int> keys;
  int component_count = 0;
  /// attractors[0] is the cycle passed to basin_label.
  std::vector<Cycle> attractors;
  /// Attractor index of each component.
  std::vector<int> component_attractor;
  /// Components containing a point of attractors[0], sorted.
  std::vector<int> cycle_components;
  std::string caveat = "immediate basin approximated by raster flood fill";

  int label_at(const SpherePoint& p) const {
    std::int64_t idx = grid.locate(p);
    return idx < 0 ? -1 : labels[idx];
  }
  bool in_cycle_components(int label) const {
    return std::binary_search(cycle_components.begin(), cycle_components.end(), label);
  }
};

namespace detail {

inline bool same_cycle(const Cycle& a, const Cycle& b) {
  if (a.period != b.period) return false;
  return a.distance(b.points[0]) < 1e-6;
}

/// The given cycle followed by other attracting cycles reached from critical points.
inline std::vector<Cycle> collect_attractors(const QuadraticRationalMap& m, const Cycle& primary, int max_iter) {
  std::vector<Cycle> out{primary};
  for (const auto& c : m.critical_points()) {
    std::optional<Cycle> cyc;
    try {
      cyc = detect_cycle(m, c, max_iter, 1e-10);
    } catch (const NumericError&) {
      continue;
    }
    if (!cyc || !cyc->attracting()) continue;
    bool known = false;
    for (const auto& o : out) known = known || same_cycle(o, *cyc);
    if (!known) out.push_back(*cyc);
  }
  return out;
}

}  // namespace detail

/// Labels the basins of `cycle` (and any other attracting cycle found from a
/// critical point) on a two-chart sphere raster and flood-fills components.
inline BasinRaster basin_label(const QuadraticRationalMap& m, const Cycle& cycle, int resolution,
                               BasinOptions opts = {}) {
  if (!cycle.attracting()) throw DomainError("cycle is not attracting");
  BasinRaster out{SphereGrid(resolution), {}, {}, 0, {}, {}, {}};
  out.attractors = detail::collect_attractors(m, cycle, kDefaultMaxIter);
  BasinClassifier classifier(m, out.attractors, opts);
  out.keys.assign(out.grid.size(), -1);
  parallel_for(0, out.grid.size(), [&](std::int64_t i) {
    if (out.grid.owned(i)) out.keys[i] = classifier.classify(out.grid.center(i)).key;
  });
  auto [labels, count] = label_components(out.grid, out.keys);
  out.labels = std::move(labels);
  out.component_count = count;
  out.component_attractor.assign(count, -1);
  for (std::int64_t i = 0; i < out.grid.size(); ++i) {
    if (out.labels[i] >= 0) out.component_attractor[out.labels[i]] = classifier.attractor_of(out.keys[i]);
  }
  for (const auto& p : cycle.points) {
    int l = out.label_at(p);
    if (l >= 0) out.cycle_components.push_back(l);
  }
  std::sort(out.cycle_components.begin(), out.cycle_components.end());
  out.cycle_components.erase(std::unique(out.cycle_components.begin(), out.cycle_components.end()),
                             out.cycle_components.end());
  return out;
}

/// Result of a lazily evaluated flood fill from one point.
struct ComponentSearch {
  bool resolved = false;        ///< false when the start pixel could not be matched
  bool reaches_cycle = false;   ///< the component contains a pixel of a cycle point
  bool touches_unconverged = false;  ///< the component borders pixels with no convergence key
  std::int64_t pixels_visited = 0;
};

/// Flood fill on the same raster as basin_label, restricted to the component
/// of `start` and evaluated lazily (best-first toward the cycle). Equivalent
/// to asking whether basin_label puts `start` into a cycle component.
inline ComponentSearch component_reaches_cycle(const QuadraticRationalMap& m, const Cycle& cycle,
                                               const SpherePoint& start, int resolution, BasinOptions opts = {}) {
  SphereGrid grid(resolution);
  BasinClassifier classifier(m, {cycle}, opts);
  std::unordered_map<std::int64_t, int> cache;
  auto key_of = [&](std::int64_t idx) {
    auto it = cache.find(idx);
    if (it != cache.end()) return it->second;
    int k = classifier.classify(grid.center(idx)).key;
    cache.emplace(idx, k);
    return k;
  };

  ComponentSearch res;
  int want = classifier.classify(start).key;
  if (want < 0) return res;
  std::int64_t s = grid.locate(start);
  if (s < 0) return res;
  if (key_of(s) != want) {
    std::int64_t alt = -1;
    for (std::int64_t j : grid.neighbors(s)) {
      if (key_of(j) == want) {
        alt = j;
        break;
      }
    }
    if (alt < 0) return res;
    s = alt;
  }
  res.resolved = true;

  std::vector<std::int64_t> targets;
  for (const auto& p : cycle.points) targets.push_back(grid.locate(p));

  using Item = std::pair<double, std::int64_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  std::unordered_map<std::int64_t, char> seen;
  open.push({cycle.distance(grid.center(s)), s});
  seen[s] = 1;
  while (!open.empty()) {
    auto [d, idx] = open.top();
    open.pop();
    ++res.pixels_visited;
    if (std::find(targets.begin(), targets.end(), idx) != targets.end()) {
      res.reaches_cycle = true;
      return res;
    }
    for (std::int64_t j : grid.neighbors(idx)) {
      if (seen.count(j)) continue;
      seen[j] = 1;
      int kj = key_of(j);
      if (kj < 0) res.touches_unconverged = true;
      if (kj != want) continue;
      open.push({cycle.distance(grid.center(j)), j});
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Free critical point classification

enum class Tag { PeriodicCritical, Immediate, Capture, OtherAttractor, Unresolved };

inline const char* tag_name(Tag t) {
  switch (t) {
    case Tag::PeriodicCritical: return "PERIODIC_CRITICAL";
    case Tag::Immediate: return "IMMEDIATE";
    case Tag::Capture: return "CAPTURE";
    case Tag::OtherAttractor: return "OTHER_ATTRACTOR";
    case Tag::Unresolved: return "UNRESOLVED";
  }
  return "UNRESOLVED";
}

inline std::optional<Tag> tag_from_name(const std::string& s) {
  for (Tag t : {Tag::PeriodicCritical, Tag::Immediate, Tag::Capture, Tag::OtherAttractor, Tag::Unresolved}) {
    if (s == tag_name(t)) return t;
  }
  return std::nullopt;
}

struct Evidence {
  int orbit_length = 0;                   ///< iterations of the free critical orbit used
  std::optional<int> landing_time;        ///< exact landing on the marked cycle
  std::optional<int> own_period;          ///< free critical point is itself periodic
  std::optional<int> entry_step;          ///< first step within the entry radius
  std::optional<int> attractor_period;    ///< for OTHER_ATTRACTOR
  std::optional<cplx> attractor_multiplier;
  std::optional<cplx> center;             ///< critically finite parameter found inside a scan cell
  std::int64_t pixels_visited = 0;
  int resolution = 0;
  std::string note;
};

struct Classification {
  Tag tag = Tag::Unresolved;
  Evidence evidence;
};

struct ClassifyOptions {
  int resolution = 512;
  int max_iter = kDefaultMaxIter;
  BasinOptions basin{};
};

/// Tags the behaviour of c2 relative to the marked cycle of c1.
inline Classification classify_free_critical(const FamilyMember& fm, const ClassifyOptions& opts) {
  const QuadraticRationalMap& m = fm.map;
  const Cycle marked = marked_cycle(fm);
  const SpherePoint c2 = m.c2();
  Classification out;
  out.evidence.resolution = opts.resolution;

  SpherePoint z = c2;
  double prev = marked.distance(z);
  for (int n = 1; n <= opts.max_iter; ++n) {
    z = m(z);
    out.evidence.orbit_length = n;
    double d = marked.distance(z);
    // An exact landing arrives from outside the local neighbourhood; inside it
    // the super-attracting convergence only approaches the cycle.
    if (d < kLandingTolerance && prev > kEntryRadius) {
      out.tag = Tag::PeriodicCritical;
      out.evidence.landing_time = n;
      out.evidence.note = "free critical orbit lands on the marked cycle";
      return out;
    }
    if (chordal_distance(z, c2) < kLandingTolerance) {
      out.tag = Tag::PeriodicCritical;
      out.evidence.own_period = n;
      out.evidence.note = "free critical point is periodic";
      return out;
    }
    if (d < kEntryRadius) {
      bool stays = true;
      SpherePoint w = z;
      for (int j = 0; j < 2 * fm.k && stays; ++j) {
        w = m(w);
        stays = marked.distance(w) < kConfirmRadius;
      }
      if (!stays) {
        prev = d;
        continue;
      }
      out.evidence.entry_step = n;
      ComponentSearch search = component_reaches_cycle(m, marked, c2, opts.resolution, opts.basin);
      out.evidence.pixels_visited = search.pixels_visited;
      if (!search.resolved) {
        out.tag = Tag::Unresolved;
        out.evidence.note = "free critical point within a pixel of the Julia set";
      } else if (!search.reaches_cycle && search.touches_unconverged) {
        // The raster cannot tell a separate component from one cut off by slow pixels.
        out.tag = Tag::Unresolved;
        out.evidence.note = "component of the free critical point bounded by unconverged pixels";
      } else {
        out.tag = search.reaches_cycle ? Tag::Immediate : Tag::Capture;
        out.evidence.note = "immediate basin approximated by raster flood fill";
      }
      return out;
    }
    prev = d;
  }

  std::optional<Cycle> other;
  try {
    other = detect_cycle(m, c2, opts.max_iter, 1e-10);
  } catch (const NumericError&) {
    other.reset();
  }
  if (other && other->attracting() && !detail::same_cycle(*other, marked)) {
    out.tag = Tag::OtherAttractor;
    out.evidence.attractor_period = other->period;
    out.evidence.attractor_multiplier = other->multiplier;
    return out;
  }
  out.tag = Tag::Unresolved;
  return out;
}

inline Classification classify_free_critical(const FamilyMember& fm, int resolution = 512,
                                             int max_iter = kDefaultMaxIter) {
  ClassifyOptions o;
  o.resolution = resolution;
  o.max_iter = max_iter;
  return classify_free_critical(fm, o);
}

// ---------------------------------------------------------------------------
// Centers

namespace detail {

struct ValueDerivative {
  cplx value;
  cplx derivative;
};

/// Newton iteration with a final residual check.
template <typename Fn>
cplx newton_solve(Fn&& fn, cplx guess, double residual_tol, const char* what) {
  cplx x = guess;
  for (int it = 0; it < 100; ++it) {
    ValueDerivative vd = fn(x);
    if (vd.value == cplx(0.0, 0.0)) return x;
    cplx step = vd.value / vd.derivative;
    if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
    x -= step;
    if (std::abs(step) <= 4e-16 * std::max(1.0, std::abs(x))) {
      for (int polish = 0; polish < 2; ++polish) {
        ValueDerivative p = fn(x);
        if (p.value == cplx(0.0, 0.0)) break;
        cplx s = p.value / p.derivative;
        if (std::abs(s) > 1e-10 * std::max(1.0, std::abs(x))) break;
        x -= s;
      }
      double r = std::abs(fn(x).value);
      if (r < residual_tol) return x;
      break;
    }
  }
  throw NumericError(std::string(what) + ": Newton did not converge (last iterate " + SpherePoint(x).to_string() +
                     ")");
}

/// Orbit of the free critical point with the derivative w.r.t. the parameter.
/// k = 1: z -> z^2 + c from 0.  k = 2: z -> a/(z^2 + 2z) from -1.
inline std::vector<ValueDerivative> free_orbit(int k, cplx param, int steps) {
  std::vector<ValueDerivative> orbit;
  orbit.reserve(steps + 1);
  cplx z = k == 1 ? cplx(0.0, 0.0) : cplx(-1.0, 0.0);
  cplx dz(0.0, 0.0);
  orbit.push_back({z, dz});
  for (int j = 0; j < steps; ++j) {
    if (k == 1) {
      dz = 2.0 * z * dz + 1.0;
      z = z * z + param;
    } else {
      cplx q = z * z + 2.0 * z;
      dz = 1.0 / q - param * (2.0 * z + 2.0) * dz / (q * q);
      z = param / q;
    }
    orbit.push_back({z, dz});
  }
  return orbit;
}

}  // namespace detail

/// Parameter at which the free critical orbit lands on the marked cycle at
/// step `landing_time`. For k = 1 this is Q_n(c) = 0 (Q_1 = c, Q_{n+1} = Q_n^2 + c):
/// 0 is periodic and the orbit lands on itself. For k = 2 the landing_time-th
/// iterate of -1 is infinity (the marked critical point).
inline cplx find_center(int k, int landing_time, cplx guess) {
  if (k != 1 && k != 2) throw DomainError("period not implemented");
  if (landing_time < 1) throw DomainError("landing time must be >= 1");
  cplx c;
  if (k == 1) {
    c = detail::newton_solve(
        [&](cplx p) {
          auto o = detail::free_orbit(1, p, landing_time);
          return detail::ValueDerivative{o.back().value, o.back().derivative};
        },
        guess, 1e-12, "find_center");
    if (landing_time > 1 && std::abs(c) < 1e-8) throw NumericError("degenerate center");
  } else {
    c = detail::newton_solve(
        [&](cplx a) {
          auto o = detail::free_orbit(2, a, landing_time - 1);
          cplx z = o.back().value, dz = o.back().derivative;
          cplx q = z * z + 2.0 * z;
          // 1 / f_a^n(-1) = q / a
          return detail::ValueDerivative{q / a, (2.0 * z + 2.0) * dz / a - q / (a * a)};
        },
        guess, 1e-12, "find_center");
    if (std::abs(c) < 1e-8) throw NumericError("degenerate center");
  }
  return c;
}

/// Parameter at which the free critical point is periodic with period dividing `period`.
inline cplx find_periodic_free_center(int k, int period, cplx guess) {
  if (k == 1) return find_center(1, period, guess);
  if (k != 2) throw DomainError("period not implemented");
  cplx a = detail::newton_solve(
      [&](cplx p) {
        auto o = detail::free_orbit(2, p, period);
        return detail::ValueDerivative{o.back().value + 1.0, o.back().derivative};
      },
      guess, 1e-12, "find_periodic_free_center");
  if (std::abs(a) < 1e-8) throw NumericError("degenerate center");
  return a;
}

/// Misiurewicz parameter for z^2 + c: Q_{1+pre+per}(c) = Q_{1+pre}(c), i.e. the
/// critical value c = Q_1 is strictly preperiodic with the given data.
inline cplx find_preperiodic_center(int preperiod, int period, cplx guess) {
  if (preperiod < 1 || period < 1) throw DomainError("preperiod and period must be >= 1");
  return detail::newton_solve(
      [&](cplx c) {
        const int a = preperiod + 1, b = preperiod + period + 1;
        auto o = detail::free_orbit(1, c, b);
        return detail::ValueDerivative{o[b].value - o[a].value, o[b].derivative - o[a].derivative};
      },
      guess, 1e-12, "find_preperiodic_center");
}

// ---------------------------------------------------------------------------
// Super-attracting signature

struct SignatureEntry {
  int period = 0;
  int critical_on_cycle = 0;
  /// Landing times of critical orbits that land exactly on the cycle.
  std::vector<int> landing_times;

  friend bool operator==(const SignatureEntry&, const SignatureEntry&) = default;
  friend bool operator<(const SignatureEntry& a, const SignatureEntry& b) {
    if (a.period != b.period) return a.period < b.period;
    if (a.critical_on_cycle != b.critical_on_cycle) return a.critical_on_cycle < b.critical_on_cycle;
    return a.landing_times < b.landing_times;
  }
};

using Signature = std::vector<SignatureEntry>;

/// Structure of the super-attracting cycles: period, number of critical points
/// on each, and landing times of the remaining critical orbits. Sorted; two
/// maps can only represent one another when their signatures agree.
inline Signature superattracting_signature(const QuadraticRationalMap& m, double tol = 1e-9) {
  const auto& crit = m.critical_points();
  struct Found {
    std::vector<SpherePoint> points;
    SignatureEntry entry;
  };
  std::vector<Found> cycles;
  std::array<bool, 2> periodic{false, false};
  for (int c = 0; c < 2; ++c) {
    SpherePoint z = crit[c];
    std::vector<SpherePoint> orbit{z};
    for (int n = 1; n <= kMaxPeriod; ++n) {
      z = m(z);
      if (chordal_distance(z, crit[c]) < tol) {
        periodic[c] = true;
        bool known = false;
        for (auto& f : cycles) {
          for (const auto& p : f.points) known = known || chordal_distance(p, crit[c]) < tol;
          if (known) {
            ++f.entry.critical_on_cycle;
            break;
          }
        }
        if (!known) cycles.push_back({orbit, {n, 1, {}}});
        break;
      }
      orbit.push_back(z);
    }
  }
  for (int c = 0; c < 2; ++c) {
    if (periodic[c]) continue;
    SpherePoint z = crit[c];
    double prev = 2.0;
    for (const auto& f : cycles)
      for (const auto& p : f.points) prev = std::min(prev, chordal_distance(z, p));
    bool landed = false;
    for (int n = 1; n <= 2 * kMaxPeriod && !landed; ++n) {
      z = m(z);
      for (auto& f : cycles) {
        double d = 2.0;
        for (const auto& p : f.points) d = std::min(d, chordal_distance(z, p));
        if (d < tol && prev > kEntryRadius) {
          f.entry.landing_times.push_back(n);
          landed = true;
          break;
        }
      }
      prev = 2.0;
      for (const auto& f : cycles)
        for (const auto& p : f.points) prev = std::min(prev, chordal_distance(z, p));
    }
  }
  Signature sig;
  for (auto& f : cycles) {
    std::sort(f.entry.landing_times.begin(), f.entry.landing_times.end());
    sig.push_back(f.entry);
  }
  std::sort(sig.begin(), sig.end());
  return sig;
}

// ---------------------------------------------------------------------------
// Parameter scan

struct Window {
  double x0 = -2.2, x1 = 0.8, y0 = -1.3, y1 = 1.3;
};

struct ScanOptions {
  int basin_resolution = 256;
  int max_iter = 2000;
  /// Search each cell for a critically finite parameter and tag the cell
  /// PERIODIC_CRITICAL when one lies inside it.
  bool locate_centers = true;
};

struct ScanCell {
  int row = 0;  ///< 0 is the top row (largest imaginary part)
  int col = 0;
  cplx parameter;
  Classification classification;
};

/// Parameter at the center of cell (row, col).
inline cplx cell_parameter(const Window& w, int resolution, int row, int col) {
  double dx = (w.x1 - w.x0) / resolution, dy = (w.y1 - w.y0) / resolution;
  return {w.x0 + (col + 0.5) * dx, w.y1 - (row + 0.5) * dy};
}

namespace detail {

inline bool inside_cell(const Window& w, int resolution, cplx center, cplx p) {
  double hx = 0.5 * (w.x1 - w.x0) / resolution, hy = 0.5 * (w.y1 - w.y0) / resolution;
  return std::abs(p.real() - center.real()) <= hx && std::abs(p.imag() - center.imag()) <= hy;
}

inline void locate_cell_center(int k, const Window& w, int resolution, ScanCell& cell) {
  Evidence& ev = cell.classification.evidence;
  std::vector<std::pair<int, bool>> attempts;  // (n, landing?) landing: hits marked cycle at n
  Tag t = cell.classification.tag;
  if (t == Tag::OtherAttractor && ev.attractor_period) {
    attempts.push_back({*ev.attractor_period, false});
  } else if (k == 2 && (t == Tag::Capture || t == Tag::Immediate) && ev.entry_step) {
    for (int n = 1; n <= std::min(*ev.entry_step + 1, kMaxPeriod); ++n) attempts.push_back({n, true});
  }
  for (auto [n, landing] : attempts) {
    cplx center;
    try {
      center = landing ? find_center(k, n, cell.parameter) : find_periodic_free_center(k, n, cell.parameter);
    } catch (const Error&) {
      continue;
    }
    if (!inside_cell(w, resolution, cell.parameter, center)) continue;
    cell.classification.tag = Tag::PeriodicCritical;
    ev.center = center;
    if (landing) {
      ev.landing_time = n;
    } else {
      ev.own_period = n;
    }
    ev.note = "cell contains a critically finite parameter";
    return;
  }
}

}  // namespace detail

/// Classifies one grid cell; numeric failures become UNRESOLVED.
inline ScanCell scan_cell(int k, const Window& w, int resolution, int row, int col, const ScanOptions& opts) {
  ScanCell cell{row, col, cell_parameter(w, resolution, row, col), {}};
  try {
    FamilyMember fm = family_member(k, cell.parameter);
    ClassifyOptions co;
    co.resolution = opts.basin_resolution;
    co.max_iter = opts.max_iter;
    cell.classification = classify_free_critical(fm, co);
    if (opts.locate_centers && cell.classification.tag != Tag::PeriodicCritical) {
      detail::locate_cell_center(k, w, resolution, cell);
    }
  } catch (const Error& e) {
    cell.classification = {};
    cell.classification.tag = Tag::Unresolved;
    cell.classification.evidence.note = e.what();
  }
  return cell;
}

/// All cells of a resolution x resolution grid, row-major from the top row.
inline std::vector<ScanCell> param_scan(int k, const Window& w, int resolution, const ScanOptions& opts = {}) {
  if (k != 1 && k != 2) throw DomainError("period not implemented");
  if (resolution < 1) throw DomainError("resolution must be positive");
  std::vector<ScanCell> cells(static_cast<std::size_t>(resolution) * resolution);
  parallel_for(0, static_cast<std::int64_t>(cells.size()), [&](std::int64_t i) {
    cells[i] = scan_cell(k, w, resolution, static_cast<int>(i / resolution), static_cast<int>(i % resolution), opts);
  });
  return cells;
}

}  // namespace reglue
