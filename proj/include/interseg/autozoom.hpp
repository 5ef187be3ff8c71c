#pragma once

// AutoZoom inference: a coarse pass on a region of interest that grows by a
// fixed factor until the prediction stops touching its interior faces,
// followed by full-resolution refinement over the coarse foreground.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "interseg/resample.hpp"
#include "interseg/segmenters.hpp"

namespace interseg {

struct AutoZoomConfig {
  int patch = 192;
  double zoom_step = 1.5;
  double zoom_cap = 4.0;
  /// Face trigger. Absolute: count >= border_threshold. Relative:
  /// count >= max(relative_floor, relative_fraction * face area).
  double border_threshold = 1000;
  bool relative = false;
  double relative_fraction = 0.2;
  double relative_floor = 100;
  bool scale_threshold_by_zoom3 = false;
  double stride_fraction = 0.5;
  bool refine = true;
};

/// Patch extent per axis; flat grids keep a single slice.
inline Shape3 patch_shape(int patch, const Shape3& volume) {
  if (patch <= 0) throw std::invalid_argument("patch size must be positive");
  return {patch, patch, volume.is_2d() ? 1 : patch};
}

struct Roi {
  Box3 box;
  double zoom = 1.0;
  int level = 0;  // zoom == min(cap, step^level)
};

inline double zoom_at(int level, const AutoZoomConfig& cfg) {
  return std::min(cfg.zoom_cap, std::pow(cfg.zoom_step, level));
}

/// ROI of the given zoom level centred on `center_box`, clamped to the volume.
inline Roi roi_at_level(const Box3& center_box, int level, const Shape3& volume, const AutoZoomConfig& cfg) {
  const Shape3 ps = patch_shape(cfg.patch, volume);
  Roi r;
  r.level = level;
  r.zoom = zoom_at(level, cfg);
  for (int a = 0; a < 3; ++a) {
    const int ext = std::min(volume[a], static_cast<int>(std::ceil(ps[a] * r.zoom - 1e-9)));
    const int twice_lo = center_box.lo[a] + center_box.hi[a] - ext;
    int lo = twice_lo >= 0 ? twice_lo / 2 : -((-twice_lo + 1) / 2);
    lo = std::clamp(lo, 0, volume[a] - ext);
    r.box.lo[a] = lo;
    r.box.hi[a] = lo + ext;
  }
  return r;
}

/// Smallest zoom level whose ROI holds the prompt plus patch/6 per side
/// (or the whole axis when the volume is shorter), capped.
inline Roi initial_roi(const Box3& prompt, const Shape3& volume, const AutoZoomConfig& cfg = {}) {
  if (prompt.empty() || !prompt.inside(volume)) throw std::invalid_argument("initial_roi: prompt outside volume");
  const Shape3 ps = patch_shape(cfg.patch, volume);
  const int border = cfg.patch / 6;
  int level = 0;
  for (;; ++level) {
    const double z = zoom_at(level, cfg);
    bool fits = true;
    for (int a = 0; a < 3; ++a) {
      const int need = std::min(volume[a], prompt.extent(a) + (ps[a] > 1 ? 2 * border : 0));
      fits &= std::ceil(ps[a] * z - 1e-9) >= need;
    }
    if (fits || z >= cfg.zoom_cap) break;
  }
  return roi_at_level(prompt, level, volume, cfg);
}

/// Voxel grid on which the segmenter sees the ROI: the ROI itself when it
/// fits in a patch, else the patch extent on the axes that exceed it.
inline Shape3 roi_patch_grid(const Roi& roi, const Shape3& volume, const AutoZoomConfig& cfg) {
  const Shape3 ps = patch_shape(cfg.patch, volume);
  const Shape3 e = roi.box.shape();
  return {std::min(ps[0], e[0]), std::min(ps[1], e[1]), std::min(ps[2], e[2])};
}

/// True iff some ROI face that is not on the volume boundary carries at
/// least the threshold of foreground. `pred` is the prediction on the ROI
/// at any resolution; faces are its outermost voxel layers.
inline bool needs_zoom_out(const BinaryMask3D& pred, const Roi& roi, const Shape3& volume,
                           const AutoZoomConfig& cfg = {}) {
  const Shape3& s = pred.shape();
  for (int a = 0; a < 3; ++a) {
    const int u = a == 0 ? 1 : 0, v = a == 2 ? 1 : 2;
    const double area = static_cast<double>(s[u]) * s[v];
    double thr = cfg.relative ? std::max(cfg.relative_floor, cfg.relative_fraction * area) : cfg.border_threshold;
    if (cfg.scale_threshold_by_zoom3) thr *= roi.zoom * roi.zoom * roi.zoom;
    for (int side = 0; side < 2; ++side) {
      const bool on_boundary = side == 0 ? roi.box.lo[a] == 0 : roi.box.hi[a] == volume[a];
      if (on_boundary) continue;
      const int k = side == 0 ? 0 : s[a] - 1;
      std::size_t n = 0;
      Index3 p{};
      p[a] = k;
      for (int j = 0; j < s[v]; ++j)
        for (int i = 0; i < s[u]; ++i) {
          p[u] = i;
          p[v] = j;
          n += pred.at(p) != 0;
        }
      if (static_cast<double>(n) >= thr) return true;
    }
  }
  return false;
}

struct RefinementBox {
  Box3 box;
  std::size_t foreground = 0;
};

namespace detail {

/// Window starts covering [lo, hi) with windows of length p at stride s,
/// confined to [0, n).
inline std::vector<int> window_starts(int lo, int hi, int p, int s, int n) {
  if (p >= n) return {0};
  std::vector<int> out;
  if (hi - lo <= p) {
    out.push_back(std::clamp((lo + hi - p) / 2, 0, n - p));
    return out;
  }
  for (int x = lo; x + p < hi; x += s) out.push_back(std::min(x, n - p));
  out.push_back(std::clamp(hi - p, 0, n - p));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace detail

/// Patch-sized boxes tiling the foreground bbox (inflated by `margin`)
/// at stride patch·stride_fraction, minus those without foreground, sorted
/// by foreground count descending, ties by origin.
inline std::vector<RefinementBox> plan_refinement(const BinaryMask3D& coarse, const AutoZoomConfig& cfg = {},
                                                  int margin = 0) {
  const Shape3& vs = coarse.shape();
  const Box3 fg = bounding_box(coarse);
  if (fg.empty()) return {};
  const Shape3 ps = patch_shape(cfg.patch, vs);
  Box3 area;
  for (int a = 0; a < 3; ++a) {
    area.lo[a] = std::max(0, fg.lo[a] - margin);
    area.hi[a] = std::min(vs[a], fg.hi[a] + margin);
  }
  std::array<std::vector<int>, 3> starts;
  for (int a = 0; a < 3; ++a) {
    const int stride = std::max(1, static_cast<int>(std::lround(ps[a] * cfg.stride_fraction)));
    starts[a] = detail::window_starts(area.lo[a], area.hi[a], ps[a], stride, vs[a]);
  }
  auto box_sum = [&](const Box3& b) {
    const Box3 c = intersect(b, fg);
    std::size_t n = 0;
    for (int z = c.lo[2]; z < c.hi[2]; ++z)
      for (int y = c.lo[1]; y < c.hi[1]; ++y) {
        const std::uint8_t* row = &coarse(c.lo[0], y, z);
        for (int x = 0; x < c.extent(0); ++x) n += row[x] != 0;
      }
    return n;
  };
  std::vector<RefinementBox> plan;
  for (int z : starts[2])
    for (int y : starts[1])
      for (int x : starts[0]) {
        Box3 b{{x, y, z}, {std::min(vs.nx, x + ps.nx), std::min(vs.ny, y + ps.ny), std::min(vs.nz, z + ps.nz)}};
        const std::size_t n = box_sum(b);
        if (n) plan.push_back({b, n});
      }
  std::sort(plan.begin(), plan.end(), [](const RefinementBox& a, const RefinementBox& b) {
    if (a.foreground != b.foreground) return a.foreground > b.foreground;
    return a.box.lo < b.box.lo;
  });
  return plan;
}

struct AutoZoomResult {
  BinaryMask3D mask;
  std::vector<double> zoom_sequence;  // one entry per coarse pass
  Roi roi;                            // final ROI
  std::vector<RefinementBox> refinement;
};

inline BinaryMask3D threshold(const ScalarField& p, float t = 0.5f) {
  BinaryMask3D m(p.shape(), 0, p.spacing());
  for (std::size_t i = 0; i < p.size(); ++i) m[i] = p[i] > t;
  return m;
}

/// Coarse passes from the ROI around `prompt`, then refinement. The result
/// starts from the thresholded previous prediction; the final ROI is
/// overwritten by the upscaled coarse mask and each refinement box by its
/// patch output, in plan order.
inline AutoZoomResult run_autozoom(Segmenter& seg, const PromptChannels& channels, const BinaryMask3D* gt,
                                   const Box3& prompt, const AutoZoomConfig& cfg = {}) {
  const Shape3& vs = channels.shape();
  AutoZoomResult res;
  Roi roi = initial_roi(prompt, vs, cfg);
  BinaryMask3D coarse;
  for (;;) {
    PatchRequest req;
    req.channels = &channels;
    req.gt = gt;
    req.region = roi.box;
    req.out_shape = roi_patch_grid(roi, vs, cfg);
    coarse = threshold(seg.predict(req));
    res.zoom_sequence.push_back(roi.zoom);
    if (roi.zoom >= cfg.zoom_cap || !needs_zoom_out(coarse, roi, vs, cfg)) break;
    const Roi next = roi_at_level(prompt, roi.level + 1, vs, cfg);
    if (next.box == roi.box) break;  // already the whole volume
    roi = next;
  }
  res.roi = roi;
  res.mask = channels.previous() ? threshold(*channels.previous()) : BinaryMask3D(vs, 0);
  paste(res.mask, resample(coarse, roi.box.shape(), Interp::nearest), roi.box.lo);
  if (!cfg.refine || roi.box.shape() == coarse.shape()) return res;

  BinaryMask3D roi_fg(vs, 0);
  paste(roi_fg, crop(res.mask, roi.box), roi.box.lo);
  const int margin = static_cast<int>(std::ceil(roi.zoom)) + 1;
  res.refinement = plan_refinement(roi_fg, cfg, margin);
  ScalarField composite = to_field(res.mask);
  for (const RefinementBox& rb : res.refinement) {
    PatchRequest req;
    req.channels = &channels;
    req.gt = gt;
    req.previous_override = &composite;
    req.region = rb.box;
    req.out_shape = rb.box.shape();
    const BinaryMask3D out = threshold(seg.predict(req));
    paste(res.mask, out, rb.box.lo);
    paste(composite, to_field(out), rb.box.lo);
  }
  return res;
}

/// Single native-resolution pass over the whole volume.
inline BinaryMask3D predict_whole(Segmenter& seg, const PromptChannels& channels, const BinaryMask3D* gt) {
  PatchRequest req;
  req.channels = &channels;
  req.gt = gt;
  req.region = Box3::whole(channels.shape());
  req.out_shape = channels.shape();
  return threshold(seg.predict(req));
}

}  // namespace interseg
