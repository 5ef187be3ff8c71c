#pragma once

// False-positive / false-negative regions, their selection, and the slice
// a 2D interaction is drawn on.

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "interseg/components.hpp"
#include "interseg/noise.hpp"

namespace interseg {

enum class ErrorKind { FP, FN };

inline const char* to_string(ErrorKind k) { return k == ErrorKind::FP ? "FP" : "FN"; }

/// One connected error region, stored as a crop of its bounding box.
struct ErrorComponent {
  ErrorKind kind = ErrorKind::FN;
  Shape3 volume;       // shape of the grid the component lives in
  Box3 bbox;
  BinaryMask3D local;  // shape == bbox.shape()
  std::size_t size = 0;

  bool contains(const Index3& p) const {
    return bbox.contains(p) && local(p[0] - bbox.lo[0], p[1] - bbox.lo[1], p[2] - bbox.lo[2]);
  }

  BinaryMask3D full_mask() const {
    BinaryMask3D m(volume, 0);
    paste(m, local, bbox.lo);
    return m;
  }
};

struct ErrorOptions {
  std::size_t min_size = 1;
  double cell_size = 0;  // 0: max(4, longest bbox edge / 4) per unfragmented component
  Connectivity connectivity = Connectivity::vertex;
};

namespace detail {

inline std::vector<ErrorComponent> split_components(const BinaryMask3D& m, ErrorKind kind, const ErrorOptions& opt) {
  const Components cc = label_components(m, opt.connectivity);
  const Shape3& s = m.shape();
  std::vector<Box3> boxes(static_cast<std::size_t>(cc.count()), Box3{{s.nx, s.ny, s.nz}, {0, 0, 0}});
  for (std::size_t i = 0; i < m.size(); ++i) {
    const int l = cc.labels[i];
    if (!l) continue;
    const Index3 p = m.coords(i);
    Box3& b = boxes[static_cast<std::size_t>(l) - 1];
    for (int a = 0; a < 3; ++a) {
      b.lo[a] = std::min(b.lo[a], p[a]);
      b.hi[a] = std::max(b.hi[a], p[a] + 1);
    }
  }
  std::vector<ErrorComponent> out(static_cast<std::size_t>(cc.count()));
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k].kind = kind;
    out[k].volume = s;
    out[k].bbox = boxes[k];
    out[k].local = BinaryMask3D(boxes[k].shape(), 0);
    out[k].size = cc.sizes[k];
  }
  for (std::size_t i = 0; i < m.size(); ++i) {
    const int l = cc.labels[i];
    if (!l) continue;
    ErrorComponent& c = out[static_cast<std::size_t>(l) - 1];
    const Index3 p = m.coords(i);
    c.local(p[0] - c.bbox.lo[0], p[1] - c.bbox.lo[1], p[2] - c.bbox.lo[2]) = 1;
  }
  std::erase_if(out, [&](const ErrorComponent& c) { return c.size < opt.min_size; });
  return out;
}

/// Keeps voxels where Perlin noise > 0. Each unfragmented component gets its
/// own cell size; one noise field with a random lattice offset serves all.
inline BinaryMask3D fragment(const BinaryMask3D& m, const ErrorOptions& opt, Rng& rng) {
  const PerlinNoise noise(rng);
  const Vec3 offset{rng.uniform(0, 256), rng.uniform(0, 256), rng.uniform(0, 256)};
  ErrorOptions whole = opt;
  whole.min_size = 1;
  BinaryMask3D out(m.shape(), 0, m.spacing());
  const bool flat = m.shape().is_2d();
  for (const ErrorComponent& c : split_components(m, ErrorKind::FP, whole)) {
    double cell = opt.cell_size;
    if (cell <= 0) {
      int longest = 0;
      for (int a = 0; a < 3; ++a) longest = std::max(longest, c.bbox.extent(a));
      cell = std::max(4.0, longest / 4.0);
    }
    const Shape3 ls = c.local.shape();
    for (int z = 0; z < ls.nz; ++z)
      for (int y = 0; y < ls.ny; ++y)
        for (int x = 0; x < ls.nx; ++x) {
          if (!c.local(x, y, z)) continue;
          const double gx = (c.bbox.lo[0] + x) / cell + offset[0], gy = (c.bbox.lo[1] + y) / cell + offset[1],
                       gz = (c.bbox.lo[2] + z) / cell + offset[2];
          const double v = flat ? noise.eval(gx, gy) : noise.eval(gx, gy, gz);
          if (v > 0) out(c.bbox.lo[0] + x, c.bbox.lo[1] + y, c.bbox.lo[2] + z) = 1;
        }
  }
  return out;
}

}  // namespace detail

/// FP components (raster order of first voxel) followed by FN components.
/// The rng is consumed only when `fragment` is set.
inline std::vector<ErrorComponent> compute_error_components(const BinaryMask3D& gt, const BinaryMask3D& pred,
                                                            bool fragment, Rng& rng, const ErrorOptions& opt = {}) {
  require_same_shape(gt, pred, "compute_error_components");
  std::vector<ErrorComponent> out;
  for (ErrorKind kind : {ErrorKind::FP, ErrorKind::FN}) {
    BinaryMask3D err = kind == ErrorKind::FP ? mask_minus(pred, gt) : mask_minus(gt, pred);
    if (fragment && any(err)) err = detail::fragment(err, opt, rng);
    auto part = detail::split_components(err, kind, opt);
    out.insert(out.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
  }
  return out;
}

/// The whole mask as a single component of the given kind (no connectivity
/// requirement); used for the initial prompt, which is derived from gt.
inline ErrorComponent whole_mask_component(const BinaryMask3D& m, ErrorKind kind) {
  ErrorComponent c;
  c.kind = kind;
  c.volume = m.shape();
  c.bbox = bounding_box(m);
  if (c.bbox.empty()) throw std::invalid_argument("whole_mask_component: empty mask");
  c.local = crop(m, c.bbox);
  c.size = count(c.local);
  return c;
}

/// Index i with probability size_i / sum of sizes.
inline std::size_t select_component_index(const std::vector<ErrorComponent>& comps, Rng& rng) {
  if (comps.empty()) throw std::invalid_argument("select_component: no components");
  std::uint64_t total = 0;
  for (const auto& c : comps) total += c.size;
  std::uint64_t r = rng.below(total);
  for (std::size_t i = 0; i < comps.size(); ++i) {
    if (r < comps[i].size) return i;
    r -= comps[i].size;
  }
  return comps.size() - 1;
}

inline const ErrorComponent& select_component(const std::vector<ErrorComponent>& comps, Rng& rng) {
  return comps[select_component_index(comps, rng)];
}

/// Per-slice foreground counts for one plane family, indexed by the global
/// slice index minus bbox.lo of the normal axis.
inline std::vector<std::size_t> slice_counts(const ErrorComponent& c, SliceAxis family) {
  const int n = normal_axis(family);
  std::vector<std::size_t> counts(static_cast<std::size_t>(c.bbox.extent(n)), 0);
  for (std::size_t i = 0; i < c.local.size(); ++i)
    if (c.local[i]) ++counts[static_cast<std::size_t>(c.local.coords(i)[n])];
  return counts;
}

/// (family, index) drawn with probability proportional to the component's
/// voxel count in that slice, over all three families. On a 2D grid only
/// the axial family exists.
inline SliceRef sample_slice(const ErrorComponent& c, Rng& rng) {
  if (c.size == 0) throw std::invalid_argument("sample_slice: empty component");
  std::vector<SliceAxis> families{SliceAxis::axial};
  if (!c.volume.is_2d()) families = {SliceAxis::axial, SliceAxis::coronal, SliceAxis::sagittal};
  std::uint64_t r = rng.below(static_cast<std::uint64_t>(c.size) * families.size());
  for (SliceAxis f : families) {
    const auto counts = slice_counts(c, f);
    for (std::size_t k = 0; k < counts.size(); ++k) {
      if (r < counts[k]) return {f, c.bbox.lo[normal_axis(f)] + static_cast<int>(k)};
      r -= counts[k];
    }
  }
  throw std::logic_error("sample_slice: weights exhausted");
}

}  // namespace interseg
