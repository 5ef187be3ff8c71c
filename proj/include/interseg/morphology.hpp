#pragma once

// Binary morphology with a Euclidean ball (voxels at distance <= radius) or
// a box (half-width floor(radius)) structuring element. Ball operations go
// through the exact EDT, so their cost does not depend on the radius.
//
// A single slice (nz == 1) gets 2D morphology automatically: singleton axes
// are never padded or filtered.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "interseg/edt.hpp"
#include "interseg/grid.hpp"

namespace interseg {

enum class MorphOp { erode, dilate, open, close };
enum class Element { ball, box };

/// How erosion treats voxels off the grid.
enum class Border {
  background,  // off-grid counts as background (erosion eats the edge)
  ignore,      // off-grid never removes anything
};

inline MorphOp morph_op_from_string(const std::string& s) {
  if (s == "erode") return MorphOp::erode;
  if (s == "dilate") return MorphOp::dilate;
  if (s == "open") return MorphOp::open;
  if (s == "close") return MorphOp::close;
  throw std::invalid_argument("unknown morphology op '" + s + "'");
}

inline const char* to_string(MorphOp op) {
  switch (op) {
    case MorphOp::erode: return "erode";
    case MorphOp::dilate: return "dilate";
    case MorphOp::open: return "open";
    default: return "close";
  }
}

namespace detail {

/// Running max (dilate) or min (erode) over a window of half-width r on each axis.
inline BinaryMask3D box_filter(const BinaryMask3D& m, int r, bool take_max, bool border_bg) {
  BinaryMask3D cur = m;
  const Shape3& s = m.shape();
  std::vector<int> prefix;
  for (int axis = 0; axis < 3; ++axis) {
    const int n = s[axis];
    if (n == 1) continue;
    BinaryMask3D next(s, 0, m.spacing());
    const int a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    prefix.assign(static_cast<std::size_t>(n) + 1, 0);
    for (int j = 0; j < s[a2]; ++j)
      for (int i = 0; i < s[a1]; ++i) {
        Index3 p{};
        p[a1] = i;
        p[a2] = j;
        for (int t = 0; t < n; ++t) {
          p[axis] = t;
          prefix[t + 1] = prefix[t] + (cur.at(p) ? 1 : 0);
        }
        for (int t = 0; t < n; ++t) {
          const int lo = t - r, hi = t + r;
          const int clo = std::max(lo, 0), chi = std::min(hi, n - 1);
          const int ones = prefix[chi + 1] - prefix[clo];
          const int window = chi - clo + 1;
          bool v;
          if (take_max) {
            v = ones > 0;
          } else {
            const bool clipped = lo < 0 || hi > n - 1;
            v = ones == window && !(border_bg && clipped);
          }
          p[axis] = t;
          next.at(p) = v ? 1 : 0;
        }
      }
    cur = std::move(next);
  }
  return cur;
}

}  // namespace detail

inline BinaryMask3D dilate(const BinaryMask3D& m, double radius, Element el = Element::ball) {
  if (radius < 0) throw std::invalid_argument("dilate: radius must be >= 0");
  if (radius == 0) return m;
  if (el == Element::box) return detail::box_filter(m, static_cast<int>(std::floor(radius)), true, false);
  const auto d2 = squared_distance_to(m);
  const double r2 = radius * radius;
  BinaryMask3D out(m.shape(), 0, m.spacing());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = (d2[i] != kNoFeature && d2[i] <= r2) ? 1 : 0;
  return out;
}

inline BinaryMask3D erode(const BinaryMask3D& m, double radius, Element el = Element::ball,
                          Border border = Border::background) {
  if (radius < 0) throw std::invalid_argument("erode: radius must be >= 0");
  if (radius == 0) return m;
  if (el == Element::box)
    return detail::box_filter(m, static_cast<int>(std::floor(radius)), false, border == Border::background);
  const double r2 = radius * radius;
  BinaryMask3D out(m.shape(), 0, m.spacing());
  if (border == Border::background) {
    const auto d2 = squared_edt(m, true);
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = (m[i] && d2[i] > r2) ? 1 : 0;
  } else {
    const auto d2 = squared_distance_to(complement(m));
    for (std::size_t i = 0; i < m.size(); ++i) out[i] = (m[i] && (d2[i] == kNoFeature || d2[i] > r2)) ? 1 : 0;
  }
  return out;
}

/// Opening erodes with a background border; closing erodes with the border
/// ignored, which keeps it extensive (close(m) contains m) for masks
/// touching the grid edge.
inline BinaryMask3D morphology(const BinaryMask3D& m, MorphOp op, double radius, Element el = Element::ball) {
  switch (op) {
    case MorphOp::erode: return erode(m, radius, el);
    case MorphOp::dilate: return dilate(m, radius, el);
    case MorphOp::open: return dilate(erode(m, radius, el), radius, el);
    default: return erode(dilate(m, radius, el), radius, el, Border::ignore);
  }
}

/// Foreground pixels with at least one 4-neighbour (6 in 3D) outside the
/// mask; off-grid neighbours do not count.
inline BinaryMask3D inner_border(const BinaryMask3D& m) {
  const Shape3& s = m.shape();
  BinaryMask3D out(s, 0, m.spacing());
  static constexpr Index3 kFace[6] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (int z = 0; z < s.nz; ++z)
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x) {
        if (!m(x, y, z)) continue;
        for (const auto& o : kFace) {
          const Index3 q{x + o[0], y + o[1], z + o[2]};
          if (s.contains(q) && !m.at(q)) {
            out(x, y, z) = 1;
            break;
          }
        }
      }
  return out;
}

}  // namespace interseg
