#pragma once

#include <cmath>
#include <stdexcept>

#include "interseg/grid.hpp"
#include "interseg/noise.hpp"

namespace interseg {

/// Backward nearest-neighbour warp: out(p) = in(round(p + d(p))). Sources
/// off the grid read as background.
inline BinaryMask3D warp(const BinaryMask3D& mask, const DisplacementField& d) {
  const Shape3& s = mask.shape();
  const std::size_t dims = s.is_2d() ? 2 : 3;
  if (d.size() != dims) throw std::invalid_argument("warp: displacement has wrong number of components");
  for (const auto& c : d) require_same_shape(mask, c, "warp");
  BinaryMask3D out(s, 0, mask.spacing());
  for (int z = 0; z < s.nz; ++z)
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x) {
        const std::size_t i = mask.index(x, y, z);
        Index3 src{x, y, z};
        for (std::size_t a = 0; a < dims; ++a)
          src[a] = static_cast<int>(std::floor(src[a] + static_cast<double>(d[a][i]) + 0.5));
        out[i] = mask.get_or(src, 0) ? 1 : 0;
      }
  return out;
}

inline Mask2D warp2d(const Mask2D& mask, const DisplacementField& d) {
  require_2d(mask.shape(), "warp2d");
  return warp(mask, d);
}

}  // namespace interseg
