#pragma once

// Cutting the plane along [-1, 1] and opening the cut into the unit circle.
// Points on the cut carry the side they are approached from; the inverse
// Joukowski map sends side + to the upper and side - to the lower semicircle,
// so both copies of x keep the real part x.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include "reglue/errors.hpp"
#include "reglue/sphere.hpp"

namespace reglue {

enum class CutSide { None = 0, Plus = 1, Minus = -1 };

inline const char* side_name(CutSide s) {
  switch (s) {
    case CutSide::Plus:
      return "+";
    case CutSide::Minus:
      return "-";
    default:
      return "none";
  }
}

inline bool on_cut(cplx w) { return w.imag() == 0.0 && std::abs(w.real()) <= 1.0; }

struct CutPlanePoint {
  cplx w;
  CutSide side = CutSide::None;

  /// Side is present exactly on [-1, 1]; the endpoints may omit it.
  bool valid() const {
    if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) return false;
    if (!on_cut(w)) return side == CutSide::None;
    if (std::abs(w.real()) == 1.0) return true;
    return side != CutSide::None;
  }

  friend bool operator==(const CutPlanePoint&, const CutPlanePoint&) = default;
};

/// Inverse Joukowski map onto |z| >= 1 with z ~ 2w at infinity.
inline cplx open_cut(const CutPlanePoint& p) {
  if (!p.valid()) throw DomainError("invalid cut-plane point: side tag required exactly on [-1, 1]");
  if (on_cut(p.w)) {
    const double x = p.w.real();
    const double y = std::sqrt(std::max(0.0, 1.0 - x * x));
    return {x, p.side == CutSide::Minus ? -y : y};
  }
  // The product of principal roots is continuous off [-1, 1] and keeps |z| >= 1.
  return p.w + std::sqrt(p.w - 1.0) * std::sqrt(p.w + 1.0);
}

inline constexpr double kCircleTolerance = 1e-12;

/// Joukowski map w = (z + 1/z)/2; points on the circle get the side of their half.
inline CutPlanePoint close_cut(cplx z) {
  const double r = std::abs(z);
  if (!(r >= 1.0 - kCircleTolerance)) throw DomainError("inside the circle");
  if (std::abs(r - 1.0) <= kCircleTolerance) {
    const double x = std::clamp(z.real() / r, -1.0, 1.0);
    CutSide side = CutSide::None;
    if (std::abs(x) < 1.0) side = z.imag() > 0.0 ? CutSide::Plus : CutSide::Minus;
    return {cplx(x, 0.0), side};
  }
  return {0.5 * (z + 1.0 / z), CutSide::None};
}

struct RegluePair {
  CutPlanePoint before;
  cplx after;
};

/// Paired point clouds for plotting: a polar grid of off-cut points plus both
/// copies of `cut_samples` points of the cut.
inline std::vector<RegluePair> reglue_demo(int radial, int angular, int cut_samples, std::uint64_t seed) {
  if (radial < 1 || angular < 1 || cut_samples < 0) throw DomainError("demo sizes must be positive");
  std::vector<RegluePair> out;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.25, 0.25);
  for (int i = 0; i < radial; ++i) {
    for (int j = 0; j < angular; ++j) {
      double r = 1.0 + 2.0 * (i + 1.0) / radial;
      double a = 2.0 * std::numbers::pi * (j + 0.5 + jitter(rng)) / angular;
      // Points of the annulus in z are pulled back so that both clouds are dense.
      CutPlanePoint p = close_cut(std::polar(r, a));
      out.push_back({p, open_cut(p)});
    }
  }
  for (int k = 0; k < cut_samples; ++k) {
    double x = -1.0 + 2.0 * (k + 0.5) / cut_samples;
    for (CutSide s : {CutSide::Plus, CutSide::Minus}) {
      CutPlanePoint p{cplx(x, 0.0), s};
      out.push_back({p, open_cut(p)});
    }
  }
  return out;
}

}  // namespace reglue
