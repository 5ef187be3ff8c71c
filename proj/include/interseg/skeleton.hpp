#pragma once

// Topology-preserving thinning of 2D masks (8-connected foreground,
// 4-connected background). Each iteration peels one layer in four
// directional sub-cycles: candidates are collected first, then deleted one
// at a time with the simple-point test re-evaluated at deletion time, so
// no deletion can split or remove a component. End points (exactly one
// 8-neighbour) are kept, so thin strokes are preserved unchanged.

#include <array>
#include <vector>

#include "interseg/grid.hpp"

namespace interseg {

namespace detail {

// Neighbours x1..x8 counter-clockwise from east: E, NE, N, NW, W, SW, S, SE
// with "north" = -y.
inline constexpr std::array<std::array<int, 2>, 8> kRing{{
    {1, 0}, {1, -1}, {0, -1}, {-1, -1}, {-1, 0}, {-1, 1}, {0, 1}, {1, 1}}};

inline std::array<int, 8> ring(const Mask2D& m, int x, int y) {
  std::array<int, 8> v{};
  const Shape3& s = m.shape();
  for (int k = 0; k < 8; ++k) {
    const int qx = x + kRing[k][0], qy = y + kRing[k][1];
    v[k] = (qx >= 0 && qy >= 0 && qx < s.nx && qy < s.ny && m(qx, qy)) ? 1 : 0;
  }
  return v;
}

/// Yokoi 8-connectivity number; a foreground pixel is simple iff it is 1.
inline int yokoi8(const std::array<int, 8>& x) {
  int n = 0;
  for (int k : {0, 2, 4, 6}) {
    const int a = 1 - x[k], b = 1 - x[(k + 1) % 8], c = 1 - x[(k + 2) % 8];
    n += a - a * b * c;
  }
  return n;
}

inline int ring_count(const std::array<int, 8>& x) {
  int n = 0;
  for (int v : x) n += v;
  return n;
}

}  // namespace detail

inline Mask2D skeletonize2d(const Mask2D& mask) {
  require_2d(mask.shape(), "skeletonize2d");
  Mask2D m = mask;
  for (auto& v : m) v = v ? 1 : 0;
  const Shape3& s = m.shape();
  // ring index of the neighbour that must be background: N, S, E, W
  static constexpr int kSide[4] = {2, 6, 0, 4};
  std::vector<std::array<int, 2>> candidates;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int side : kSide) {
      candidates.clear();
      for (int y = 0; y < s.ny; ++y)
        for (int x = 0; x < s.nx; ++x) {
          if (!m(x, y)) continue;
          const auto r = detail::ring(m, x, y);
          if (r[side] == 0 && detail::ring_count(r) > 1 && detail::yokoi8(r) == 1)
            candidates.push_back({x, y});
        }
      for (const auto& c : candidates) {
        const auto r = detail::ring(m, c[0], c[1]);
        if (detail::ring_count(r) > 1 && detail::yokoi8(r) == 1) {
          m(c[0], c[1]) = 0;
          changed = true;
        }
      }
    }
  }
  return m;
}

}  // namespace interseg
