#pragma once

// Grid resampling with centre-aligned voxels: target voxel i along an axis
// of source extent n and target extent m samples source coordinate
// (i + 0.5) * n / m - 0.5.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "interseg/grid.hpp"

namespace interseg {

enum class Interp { nearest, trilinear };

namespace detail {

struct AxisTable {
  std::vector<int> i0, i1;
  std::vector<double> w1;  // weight of i1
};

inline AxisTable axis_table(int lo, int n_src, int n_dst, int limit, Interp mode) {
  AxisTable t;
  t.i0.resize(static_cast<std::size_t>(n_dst));
  t.i1.resize(static_cast<std::size_t>(n_dst));
  t.w1.assign(static_cast<std::size_t>(n_dst), 0.0);
  const double scale = static_cast<double>(n_src) / n_dst;
  for (int i = 0; i < n_dst; ++i) {
    if (mode == Interp::nearest) {
      const int k = std::min(static_cast<int>(std::floor((i + 0.5) * scale)), n_src - 1);
      t.i0[i] = t.i1[i] = std::clamp(lo + k, 0, limit - 1);
      continue;
    }
    const double c = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(n_src - 1));
    const int k = static_cast<int>(std::floor(c));
    const int k1 = std::min(k + 1, n_src - 1);
    t.i0[i] = std::clamp(lo + k, 0, limit - 1);
    t.i1[i] = std::clamp(lo + k1, 0, limit - 1);
    t.w1[i] = c - k;
  }
  return t;
}

}  // namespace detail

/// Resamples the `region` of `src` onto a grid of `target` shape.
template <typename T>
Grid<T> resample_region(const Grid<T>& src, const Box3& region, const Shape3& target, Interp mode) {
  const Shape3& s = src.shape();
  std::array<detail::AxisTable, 3> tab;
  for (int a = 0; a < 3; ++a) tab[a] = detail::axis_table(region.lo[a], region.extent(a), target[a], s[a], mode);
  Vec3 sp = src.spacing();
  for (int a = 0; a < 3; ++a) sp[a] *= static_cast<double>(region.extent(a)) / target[a];
  Grid<T> out(target, T{}, sp);
  for (int z = 0; z < target.nz; ++z)
    for (int y = 0; y < target.ny; ++y)
      for (int x = 0; x < target.nx; ++x) {
        if (mode == Interp::nearest) {
          out(x, y, z) = src(tab[0].i0[x], tab[1].i0[y], tab[2].i0[z]);
          continue;
        }
        const double wx = tab[0].w1[x], wy = tab[1].w1[y], wz = tab[2].w1[z];
        const int x0 = tab[0].i0[x], x1 = tab[0].i1[x], y0 = tab[1].i0[y], y1 = tab[1].i1[y];
        const int z0 = tab[2].i0[z], z1 = tab[2].i1[z];
        auto v = [&](int a, int b, int c) { return static_cast<double>(src(a, b, c)); };
        const double c00 = v(x0, y0, z0) * (1 - wx) + v(x1, y0, z0) * wx;
        const double c10 = v(x0, y1, z0) * (1 - wx) + v(x1, y1, z0) * wx;
        const double c01 = v(x0, y0, z1) * (1 - wx) + v(x1, y0, z1) * wx;
        const double c11 = v(x0, y1, z1) * (1 - wx) + v(x1, y1, z1) * wx;
        const double r = (c00 * (1 - wy) + c10 * wy) * (1 - wz) + (c01 * (1 - wy) + c11 * wy) * wz;
        out(x, y, z) = static_cast<T>(r);
      }
  return out;
}

/// Identity when shapes already match. Use trilinear for intensities and
/// probabilities, nearest for masks and labels.
template <typename T>
Grid<T> resample(const Grid<T>& src, const Shape3& target, Interp mode) {
  if (src.shape() == target) return src;
  return resample_region(src, Box3::whole(src.shape()), target, mode);
}

}  // namespace interseg
