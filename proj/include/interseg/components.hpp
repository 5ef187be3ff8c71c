#pragma once

#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "interseg/grid.hpp"

namespace interseg {

/// Neighbourhood for connectivity. On a single slice (nz == 1) 6 behaves as
/// 4-connectivity and 18/26 as 8-connectivity.
enum class Connectivity : int { face = 6, edge = 18, vertex = 26 };

inline Connectivity connectivity_from_int(int c) {
  switch (c) {
    case 4:
    case 6: return Connectivity::face;
    case 18: return Connectivity::edge;
    case 8:
    case 26: return Connectivity::vertex;
    default: throw std::invalid_argument("unsupported connectivity " + std::to_string(c));
  }
}

inline std::vector<Index3> neighbour_offsets(Connectivity c) {
  std::vector<Index3> out;
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
        if (manhattan == 0) continue;
        if (c == Connectivity::face && manhattan > 1) continue;
        if (c == Connectivity::edge && manhattan > 2) continue;
        out.push_back({dx, dy, dz});
      }
  return out;
}

struct Components {
  LabelMap3D labels;               // 0 = background, 1..count
  std::vector<std::size_t> sizes;  // sizes[k - 1] = voxel count of label k
  int count() const { return static_cast<int>(sizes.size()); }
};

/// Labels connected foreground regions. Labels are assigned in raster order
/// of each component's first voxel, so they are consecutive and
/// deterministic.
inline Components label_components(const BinaryMask3D& mask, Connectivity conn = Connectivity::vertex) {
  const Shape3& s = mask.shape();
  Components out{LabelMap3D(s, 0, mask.spacing()), {}};
  const auto offsets = neighbour_offsets(conn);
  std::vector<std::size_t> queue;
  std::int32_t next = 0;
  for (std::size_t start = 0; start < mask.size(); ++start) {
    if (!mask[start] || out.labels[start] != 0) continue;
    ++next;
    std::size_t size = 0;
    queue.clear();
    queue.push_back(start);
    out.labels[start] = next;
    while (!queue.empty()) {
      const std::size_t cur = queue.back();
      queue.pop_back();
      ++size;
      const Index3 p = mask.coords(cur);
      for (const auto& o : offsets) {
        const Index3 q{p[0] + o[0], p[1] + o[1], p[2] + o[2]};
        if (!s.contains(q)) continue;
        const std::size_t qi = mask.index(q);
        if (mask[qi] && out.labels[qi] == 0) {
          out.labels[qi] = next;
          queue.push_back(qi);
        }
      }
    }
    out.sizes.push_back(size);
  }
  return out;
}

inline LabelMap3D connected_components(const BinaryMask3D& mask, Connectivity conn = Connectivity::vertex) {
  return label_components(mask, conn).labels;
}

inline BinaryMask3D component_mask(const LabelMap3D& labels, std::int32_t id) {
  BinaryMask3D out(labels.shape(), 0, labels.spacing());
  for (std::size_t i = 0; i < labels.size(); ++i) out[i] = labels[i] == id ? 1 : 0;
  return out;
}

/// Largest connected region (ties go to the lowest label); empty input stays empty.
inline BinaryMask3D largest_component(const BinaryMask3D& mask, Connectivity conn = Connectivity::vertex) {
  const Components cc = label_components(mask, conn);
  if (cc.count() == 0) return BinaryMask3D(mask.shape(), 0, mask.spacing());
  int best = 0;
  for (int k = 1; k < cc.count(); ++k)
    if (cc.sizes[k] > cc.sizes[best]) best = k;
  return component_mask(cc.labels, best + 1);
}

}  // namespace interseg
