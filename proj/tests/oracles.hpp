#pragma once

// Brute-force reference implementations used only by tests. They share no
// code with the engine beyond the Grid container.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "interseg/grid.hpp"
#include "interseg/rng.hpp"

namespace oracle {

using interseg::BinaryMask3D;
using interseg::Index3;
using interseg::Shape3;

/// Union-find over all adjacent foreground pairs; returns the root of every
/// voxel (or -1 for background).
inline std::vector<long> union_find_roots(const BinaryMask3D& m, int connectivity) {
  const Shape3& s = m.shape();
  std::vector<long> parent(m.size());
  std::iota(parent.begin(), parent.end(), 0L);
  auto find = [&](long x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int z = 0; z < s.nz; ++z)
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x) {
        if (!m(x, y, z)) continue;
        for (int dz = -1; dz <= 1; ++dz)
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const int nz = (dx != 0) + (dy != 0) + (dz != 0);
              if (nz == 0) continue;
              if (connectivity == 6 && nz > 1) continue;
              if (connectivity == 18 && nz > 2) continue;
              const Index3 q{x + dx, y + dy, z + dz};
              if (!s.contains(q) || !m.at(q)) continue;
              const long a = find(static_cast<long>(m.index(x, y, z)));
              const long b = find(static_cast<long>(m.index(q)));
              if (a != b) parent[std::max(a, b)] = std::min(a, b);
            }
      }
  std::vector<long> root(m.size(), -1);
  for (std::size_t i = 0; i < m.size(); ++i)
    if (m[i]) root[i] = find(static_cast<long>(i));
  return root;
}

inline int count_roots(const std::vector<long>& roots) {
  std::vector<long> r;
  for (long v : roots)
    if (v >= 0) r.push_back(v);
  std::sort(r.begin(), r.end());
  return static_cast<int>(std::unique(r.begin(), r.end()) - r.begin());
}

/// Squared distance to the nearest background voxel by exhaustive search.
/// The grid border counts as background along axes longer than one voxel
/// (all axes when every axis is a singleton).
inline std::vector<long> brute_squared_edt(const BinaryMask3D& m) {
  const Shape3& s = m.shape();
  const bool all_single = s.nx == 1 && s.ny == 1 && s.nz == 1;
  std::vector<Index3> bg;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!m[i]) bg.push_back(m.coords(i));
  std::vector<long> out(m.size(), 0);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    const Index3 p = m.coords(i);
    long best = std::numeric_limits<long>::max();
    for (int a = 0; a < 3; ++a) {
      if (s[a] == 1 && !all_single) continue;
      const long d = std::min<long>(p[a] + 1, s[a] - p[a]);
      best = std::min(best, d * d);
    }
    for (const auto& q : bg) {
      long d = 0;
      for (int a = 0; a < 3; ++a) d += static_cast<long>(p[a] - q[a]) * (p[a] - q[a]);
      best = std::min(best, d);
    }
    out[i] = best;
  }
  return out;
}

/// Ball offsets with |o| <= r, restricted to axes longer than one voxel.
inline std::vector<Index3> ball_offsets(const Shape3& s, double r) {
  const int R = static_cast<int>(std::floor(r));
  std::vector<Index3> out;
  for (int dz = -R; dz <= R; ++dz)
    for (int dy = -R; dy <= R; ++dy)
      for (int dx = -R; dx <= R; ++dx) {
        if ((s.nx == 1 && dx) || (s.ny == 1 && dy) || (s.nz == 1 && dz)) continue;
        if (dx * dx + dy * dy + dz * dz <= r * r) out.push_back({dx, dy, dz});
      }
  return out;
}

inline BinaryMask3D brute_dilate(const BinaryMask3D& m, double r) {
  BinaryMask3D out(m.shape(), 0);
  const auto offs = ball_offsets(m.shape(), r);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const Index3 p = m.coords(i);
    for (const auto& o : offs) {
      const Index3 q{p[0] + o[0], p[1] + o[1], p[2] + o[2]};
      if (m.shape().contains(q) && m.at(q)) {
        out[i] = 1;
        break;
      }
    }
  }
  return out;
}

/// Erosion with off-grid neighbours counted as background.
inline BinaryMask3D brute_erode(const BinaryMask3D& m, double r) {
  BinaryMask3D out(m.shape(), 0);
  const auto offs = ball_offsets(m.shape(), r);
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!m[i]) continue;
    const Index3 p = m.coords(i);
    bool keep = true;
    for (const auto& o : offs) {
      const Index3 q{p[0] + o[0], p[1] + o[1], p[2] + o[2]};
      if (!m.shape().contains(q) || !m.at(q)) {
        keep = false;
        break;
      }
    }
    out[i] = keep;
  }
  return out;
}

inline BinaryMask3D random_mask(const Shape3& s, double density, interseg::Rng& rng) {
  BinaryMask3D m(s, 0);
  for (auto& v : m) v = rng.bernoulli(density) ? 1 : 0;
  return m;
}

inline BinaryMask3D sphere(const Shape3& s, const interseg::Vec3& c, double r) {
  BinaryMask3D m(s, 0);
  for (int z = 0; z < s.nz; ++z)
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x) {
        const double dx = x - c[0], dy = y - c[1], dz = z - c[2];
        m(x, y, z) = dx * dx + dy * dy + dz * dz <= r * r ? 1 : 0;
      }
  return m;
}

inline BinaryMask3D disc(int n, double cx, double cy, double r) { return sphere({n, n, 1}, {cx, cy, 0}, r); }

/// Chi-square statistic of observed counts against equal expectation.
inline double chi_square_uniform(const std::vector<long>& counts) {
  double total = 0;
  for (long c : counts) total += static_cast<double>(c);
  const double e = total / static_cast<double>(counts.size());
  double chi = 0;
  for (long c : counts) chi += (c - e) * (c - e) / e;
  return chi;
}

/// Upper critical values of chi-square at p = 0.01 for df = 1..9.
inline double chi_square_crit_p01(int df) {
  static constexpr double kTable[] = {6.635, 9.210, 11.345, 13.277, 15.086, 16.812, 18.475, 20.090, 21.666};
  return kTable[df - 1];
}

}  // namespace oracle
