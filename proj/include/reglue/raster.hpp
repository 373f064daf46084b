#pragma once

// Two-chart raster of the Riemann sphere.
//
// Chart 0 is the square [-1.5, 1.5]^2 in z, chart 1 the same square in 1/z.
// Chart 0 owns the pixels whose centers satisfy |z| <= 1, chart 1 those with
// |1/z| < 1; together the owned pixels tile the sphere. Adjacency is 4-adjacency
// inside a chart plus links across the unit circle: an owned pixel whose
// in-chart neighbour is not owned is linked to the owned pixel of the other
// chart that contains that neighbour's center.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "reglue/sphere.hpp"

namespace reglue {

class SphereGrid {
 public:
  static constexpr double kHalfWidth = 1.5;

  explicit SphereGrid(int resolution) : res_(resolution), h_(2.0 * kHalfWidth / resolution) {
    if (resolution < 2) throw DomainError("raster resolution too small");
    owned_.resize(size());
    for (std::int64_t i = 0; i < size(); ++i) {
      cplx zeta = chart_coordinate(i);
      owned_[i] = chart_of(i) == 0 ? std::abs(zeta) <= 1.0 : std::abs(zeta) < 1.0;
    }
  }

  int resolution() const { return res_; }
  /// Pixel side length in chart coordinates.
  double pixel_size() const { return h_; }
  std::int64_t size() const { return 2 * static_cast<std::int64_t>(res_) * res_; }

  int chart_of(std::int64_t idx) const { return static_cast<int>(idx / (static_cast<std::int64_t>(res_) * res_)); }
  int row_of(std::int64_t idx) const { return static_cast<int>((idx % (static_cast<std::int64_t>(res_) * res_)) / res_); }
  int col_of(std::int64_t idx) const { return static_cast<int>(idx % res_); }

  std::int64_t index(int chart, int row, int col) const {
    return (static_cast<std::int64_t>(chart) * res_ + row) * res_ + col;
  }

  /// Pixel center in its own chart coordinate (row 0 is the bottom row).
  cplx chart_coordinate(std::int64_t idx) const {
    return {-kHalfWidth + (col_of(idx) + 0.5) * h_, -kHalfWidth + (row_of(idx) + 0.5) * h_};
  }

  SpherePoint center(std::int64_t idx) const {
    cplx zeta = chart_coordinate(idx);
    return chart_of(idx) == 0 ? SpherePoint(zeta) : SpherePoint(zeta).reciprocal();
  }

  bool owned(std::int64_t idx) const { return owned_[idx]; }

  static Chart chart_kind(int chart) { return chart == 0 ? Chart::Plane : Chart::Inverted; }

  /// Pixel of `chart` containing p, or -1 when p lies outside that chart's square.
  std::int64_t locate_in(int chart, const SpherePoint& p) const {
    if (chart == 0 && p.is_infinity()) return -1;
    if (chart == 1 && p.is_finite() && p.value() == cplx(0.0, 0.0)) return -1;
    cplx zeta = to_chart(p, chart_kind(chart));
    double fx = (zeta.real() + kHalfWidth) / h_;
    double fy = (zeta.imag() + kHalfWidth) / h_;
    if (!(fx >= 0.0 && fy >= 0.0 && fx < res_ && fy < res_)) return -1;
    return index(chart, static_cast<int>(fy), static_cast<int>(fx));
  }

  /// The owned pixel containing p (nearest owned pixel when p sits on an ownership seam).
  std::int64_t locate(const SpherePoint& p) const {
    int chart = natural_chart(p) == Chart::Plane ? 0 : 1;
    std::int64_t idx = locate_in(chart, p);
    if (idx >= 0 && owned_[idx]) return idx;
    std::int64_t other = locate_in(1 - chart, p);
    if (other >= 0 && owned_[other]) return other;
    // Seam: choose the closest owned pixel among neighbours in the natural chart.
    std::int64_t best = -1;
    double best_d = 1e300;
    for (int c = 0; c < 2; ++c) {
      std::int64_t base = locate_in(c, p);
      if (base < 0) continue;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          int r = row_of(base) + dr, cc = col_of(base) + dc;
          if (r < 0 || cc < 0 || r >= res_ || cc >= res_) continue;
          std::int64_t j = index(c, r, cc);
          if (!owned_[j]) continue;
          double d = chordal_distance(center(j), p);
          if (d < best_d) {
            best_d = d;
            best = j;
          }
        }
      }
    }
    return best;
  }

  /// Neighbours of an owned pixel under the sphere adjacency (symmetric relation).
  std::vector<std::int64_t> neighbors(std::int64_t idx) const {
    std::vector<std::int64_t> out;
    out.reserve(8);
    int chart = chart_of(idx), row = row_of(idx), col = col_of(idx);
    static constexpr int kDr[4] = {1, -1, 0, 0};
    static constexpr int kDc[4] = {0, 0, 1, -1};
    for (int k = 0; k < 4; ++k) {
      int r = row + kDr[k], c = col + kDc[k];
      if (r < 0 || c < 0 || r >= res_ || c >= res_) continue;
      std::int64_t j = index(chart, r, c);
      if (owned_[j]) {
        out.push_back(j);
      } else {
        std::int64_t x = cross_target(j);
        if (x >= 0) push_unique(out, x);
      }
    }
    // Reverse cross links: owned pixels of the other chart whose non-owned
    // neighbour falls into idx.
    std::int64_t near = std::abs(std::abs(chart_coordinate(idx)) - 1.0) < 4.0 * h_ ? locate_in(1 - chart, center(idx)) : -1;
    if (near >= 0) {
      int nr = row_of(near), nc = col_of(near);
      for (int dr = -2; dr <= 2; ++dr) {
        for (int dc = -2; dc <= 2; ++dc) {
          int r = nr + dr, c = nc + dc;
          if (r < 0 || c < 0 || r >= res_ || c >= res_) continue;
          std::int64_t cand = index(1 - chart, r, c);
          if (!owned_[cand]) continue;
          for (int k = 0; k < 4; ++k) {
            int rr = r + kDr[k], cc = c + kDc[k];
            if (rr < 0 || cc < 0 || rr >= res_ || cc >= res_) continue;
            std::int64_t s = index(1 - chart, rr, cc);
            if (!owned_[s] && cross_target(s) == idx) push_unique(out, cand);
          }
        }
      }
    }
    return out;
  }

 private:
  /// Owned pixel of the other chart containing the center of the non-owned pixel j.
  std::int64_t cross_target(std::int64_t j) const {
    std::int64_t x = locate_in(1 - chart_of(j), center(j));
    if (x >= 0 && owned_[x]) return x;
    return -1;
  }

  static void push_unique(std::vector<std::int64_t>& v, std::int64_t x) {
    if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
  }

  int res_;
  double h_;
  std::vector<char> owned_;
};

/// Union-find over pixel indices.
class DisjointSets {
 public:
  explicit DisjointSets(std::int64_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::int64_t find(std::int64_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::int64_t a, std::int64_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) std::swap(a, b);
    parent_[a] = b;  // smaller index is the root: deterministic labels
  }

 private:
  std::vector<std::int64_t> parent_;
};

/// Labels connected components of the pixels for which `key` is >= 0 and
/// equal across an edge. Returns per-pixel component ids (-1 for excluded or
/// non-owned pixels), numbered in increasing pixel order, and the count.
template <typename KeyVector>
std::pair<std::vector<int>, int> label_components(const SphereGrid& grid, const KeyVector& key) {
  DisjointSets ds(grid.size());
  for (std::int64_t i = 0; i < grid.size(); ++i) {
    if (!grid.owned(i) || key[i] < 0) continue;
    for (std::int64_t j : grid.neighbors(i)) {
      if (j > i && key[j] == key[i]) ds.unite(i, j);
    }
  }
  std::vector<int> labels(grid.size(), -1);
  std::vector<int> root_label(grid.size(), -1);
  int count = 0;
  for (std::int64_t i = 0; i < grid.size(); ++i) {
    if (!grid.owned(i) || key[i] < 0) continue;
    std::int64_t r = ds.find(i);
    if (root_label[r] < 0) root_label[r] = count++;
    labels[i] = root_label[r];
  }
  return {std::move(labels), count};
}

}  // namespace reglue
