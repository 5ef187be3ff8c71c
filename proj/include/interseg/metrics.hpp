#pragma once

#include <span>

#include "interseg/grid.hpp"

namespace interseg {

/// 2|a ∩ b| / (|a| + |b|); two empty masks score 1.
inline double dice(const BinaryMask3D& a, const BinaryMask3D& b) {
  require_same_shape(a, b, "dice");
  std::size_t inter = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const bool x = a[i] != 0, y = b[i] != 0;
    na += x;
    nb += y;
    inter += x && y;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

/// Unweighted mean of a per-iteration Dice curve.
inline double curve_auc(std::span<const double> curve) {
  if (curve.empty()) return 0.0;
  double s = 0.0;
  for (double d : curve) s += d;
  return s / static_cast<double>(curve.size());
}

}  // namespace interseg
