#pragma once

// Semantic label map -> instance label map.

#include <map>
#include <set>
#include <vector>

#include "interseg/components.hpp"
#include "interseg/morphology.hpp"

namespace interseg {

struct CleanupRadius {
  int open = 0;
  int close = 0;
  bool operator==(const CleanupRadius&) const = default;
};

/// Per-class radii; classes without an entry use `fallback`.
struct CleanupConfig {
  CleanupRadius fallback;
  std::map<int, CleanupRadius> per_class;

  CleanupRadius for_class(int cls) const {
    auto it = per_class.find(cls);
    return it == per_class.end() ? fallback : it->second;
  }
};

struct InstanceMap {
  LabelMap3D instances;              // 0 = background, ids 1..n consecutive
  std::vector<int> instance_class;   // instance_class[id - 1] = semantic class
  int count() const { return static_cast<int>(instance_class.size()); }
};

/// Classes are processed in ascending id; within a class, components come in
/// raster order of their first voxel. Cleanup may only claim voxels that are
/// background or already belong to the same class.
inline InstanceMap instances_from_semantic(const LabelMap3D& semantic, const CleanupConfig& cleanup = {},
                                           Connectivity conn = Connectivity::vertex) {
  std::set<int> classes;
  for (auto v : semantic)
    if (v > 0) classes.insert(v);
  InstanceMap out;
  out.instances = LabelMap3D(semantic.shape(), 0, semantic.spacing());
  for (int cls : classes) {
    BinaryMask3D m(semantic.shape(), 0, semantic.spacing());
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = semantic[i] == cls;
    const CleanupRadius r = cleanup.for_class(cls);
    if (r.open > 0) m = morphology(m, MorphOp::open, r.open);
    if (r.close > 0) m = morphology(m, MorphOp::close, r.close);
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i] && semantic[i] != 0 && semantic[i] != cls) m[i] = 0;
    const Components cc = label_components(m, conn);
    const int base = out.count();
    for (std::size_t i = 0; i < m.size(); ++i)
      if (cc.labels[i] > 0) out.instances[i] = base + cc.labels[i];
    out.instance_class.insert(out.instance_class.end(), static_cast<std::size_t>(cc.count()), cls);
  }
  return out;
}

}  // namespace interseg
