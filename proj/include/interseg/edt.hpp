#pragma once

// Exact Euclidean distance transforms in voxel units.
//
// Squared distances are computed with the separable lower-envelope
// algorithm of Felzenszwalb & Huttenlocher, one axis at a time, entirely in
// integer arithmetic. Only the final edt() takes a square root.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "interseg/grid.hpp"

namespace interseg {

/// Sentinel for "no feature reachable" in squared-distance grids.
inline constexpr std::int32_t kNoFeature = std::numeric_limits<std::int32_t>::max();

namespace detail {

inline constexpr std::int64_t kInf64 = std::int64_t{1} << 52;

/// 1D squared distance transform of the sampled function f[0..n). With `pad`, virtual zero samples sit at positions -1
/// and n (a background border).
inline void squared_dt_1d(const std::int64_t* f, int n, std::int64_t* out, bool pad,
                          std::vector<std::int64_t>& pos, std::vector<std::int64_t>& val,
                          std::vector<int>& hull, std::vector<double>& z) {
  pos.clear();
  val.clear();
  if (pad) {
    pos.push_back(-1);
    val.push_back(0);
  }
  for (int i = 0; i < n; ++i) {
    if (f[i] >= kInf64) continue;
    pos.push_back(i);
    val.push_back(f[i]);
  }
  if (pad) {
    pos.push_back(n);
    val.push_back(0);
  }
  const int m = static_cast<int>(pos.size());
  if (m == 0) {
    std::fill(out, out + n, kInf64);
    return;
  }
  hull.assign(static_cast<std::size_t>(m), 0);
  z.assign(static_cast<std::size_t>(m) + 1, 0.0);
  int k = 0;
  hull[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < m; ++q) {
    double s;
    for (;;) {
      const int v = hull[k];
      const std::int64_t num = (val[q] + pos[q] * pos[q]) - (val[v] + pos[v] * pos[v]);
      s = static_cast<double>(num) / static_cast<double>(2 * (pos[q] - pos[v]));
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    hull[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int i = 0; i < n; ++i) {
    while (z[k + 1] < static_cast<double>(i)) ++k;
    const int v = hull[k];
    const std::int64_t d = i - pos[v];
    out[i] = val[v] + d * d;
  }
}

/// Runs the 1D transform along every line of every axis, in place. The
/// padded border is applied only along axes longer than one voxel (unless
/// every axis is a singleton), so 1D and 2D data behave as 1D and 2D.
inline void separable_pass(std::vector<std::int64_t>& g, const Shape3& s, bool pad) {
  const bool all_singleton = s.nx == 1 && s.ny == 1 && s.nz == 1;
  std::vector<std::int64_t> line, res, pos, val;
  std::vector<int> hull;
  std::vector<double> z;
  const std::array<std::size_t, 3> stride{1, static_cast<std::size_t>(s.nx),
                                          static_cast<std::size_t>(s.nx) * s.ny};
  for (int axis = 0; axis < 3; ++axis) {
    const int n = s[axis];
    const bool pad_axis = pad && (n > 1 || all_singleton);
    if (n == 1 && !pad_axis) continue;
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    line.resize(static_cast<std::size_t>(n));
    res.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < s[a2]; ++j)
      for (int i = 0; i < s[a1]; ++i) {
        const std::size_t base = stride[a1] * i + stride[a2] * j;
        for (int t = 0; t < n; ++t) line[t] = g[base + stride[axis] * t];
        squared_dt_1d(line.data(), n, res.data(), pad_axis, pos, val, hull, z);
        for (int t = 0; t < n; ++t) g[base + stride[axis] * t] = std::min(res[t], kInf64);
      }
  }
}

inline Grid<std::int32_t> to_int32(const std::vector<std::int64_t>& g, const Shape3& s, const Vec3& sp) {
  Grid<std::int32_t> out(s, 0, sp);
  for (std::size_t i = 0; i < g.size(); ++i)
    out[i] = g[i] >= kInf64 ? kNoFeature : static_cast<std::int32_t>(g[i]);
  return out;
}

}  // namespace detail

/// Squared distance from each foreground voxel to the nearest background
/// voxel centre; background voxels are 0. With `border_is_background` the
/// grid is treated as surrounded by background along each axis longer than
/// one voxel, so distances are always finite.
inline Grid<std::int32_t> squared_edt(const BinaryMask3D& mask, bool border_is_background = true) {
  const Shape3& s = mask.shape();
  std::vector<std::int64_t> g(mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) g[i] = mask[i] ? detail::kInf64 : 0;
  detail::separable_pass(g, s, border_is_background);
  return detail::to_int32(g, s, mask.spacing());
}

/// Squared distance from every voxel to the nearest nonzero voxel of
/// `features` (0 on features, kNoFeature when there are none).
inline Grid<std::int32_t> squared_distance_to(const BinaryMask3D& features) {
  std::vector<std::int64_t> g(features.size());
  for (std::size_t i = 0; i < features.size(); ++i) g[i] = features[i] ? 0 : detail::kInf64;
  detail::separable_pass(g, features.shape(), false);
  return detail::to_int32(g, features.shape(), features.spacing());
}

/// Euclidean distance to the nearest background voxel (isotropic voxel
/// units; spacing is ignored). With `normalize`, foreground values are
/// divided by the field maximum so the most central voxels get 1.0.
inline ScalarField edt(const BinaryMask3D& mask, bool normalize = false) {
  const auto sq = squared_edt(mask, true);
  ScalarField out(mask.shape(), 0.0f, mask.spacing());
  float peak = 0.0f;
  for (std::size_t i = 0; i < sq.size(); ++i) {
    out[i] = static_cast<float>(std::sqrt(static_cast<double>(sq[i])));
    peak = std::max(peak, out[i]);
  }
  if (normalize && peak > 0.0f)
    for (float& v : out) v /= peak;
  return out;
}

/// Per in-plane axis, the distance (pixels) from each in-mask pixel to the
/// nearest background pixel along that axis only. Off-grid pixels count as
/// background, so a run touching the edge at index 0 gets distance 1 there.
inline std::array<ScalarField, 2> directional_edt(const Mask2D& mask) {
  require_2d(mask.shape(), "directional_edt");
  const Shape3& s = mask.shape();
  std::array<ScalarField, 2> out{ScalarField(s, 0.0f), ScalarField(s, 0.0f)};
  for (int axis = 0; axis < 2; ++axis) {
    const int n = s[axis], lines = s[1 - axis];
    for (int j = 0; j < lines; ++j) {
      auto at = [&](int t) -> std::size_t { return axis == 0 ? mask.index(t, j, 0) : mask.index(j, t, 0); };
      int run_start = -1;
      for (int t = 0; t <= n; ++t) {
        const bool fg = t < n && mask[at(t)];
        if (fg && run_start < 0) run_start = t;
        if (!fg && run_start >= 0) {
          // run [run_start, t) bounded by background at run_start-1 and t
          for (int u = run_start; u < t; ++u)
            out[axis][at(u)] = static_cast<float>(std::min(u - run_start + 1, t - u));
          run_start = -1;
        }
      }
    }
  }
  return out;
}

/// Median of `field` over the nonzero pixels of `mask` (lower median); 0 when empty.
inline double masked_median(const ScalarField& field, const BinaryMask3D& mask) {
  std::vector<float> v;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) v.push_back(field[i]);
  if (v.empty()) return 0.0;
  const std::size_t mid = (v.size() - 1) / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  return v[mid];
}

}  // namespace interseg
