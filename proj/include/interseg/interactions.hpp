#pragma once

// Synthesis of point, box, lasso and scribble interactions from error
// components, and malformed initial segmentations.
//
// Random draws are separated from geometry where tests need to pin them:
// box augmentation takes explicit parameters, and deformation/truncation
// can be switched off through the option structs.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <vector>

#include "interseg/components.hpp"
#include "interseg/edt.hpp"
#include "interseg/error_regions.hpp"
#include "interseg/morphology.hpp"
#include "interseg/noise.hpp"
#include "interseg/prompts.hpp"
#include "interseg/skeleton.hpp"
#include "interseg/warp.hpp"

namespace interseg {

inline Polarity polarity_for(ErrorKind k) { return k == ErrorKind::FN ? Polarity::positive : Polarity::negative; }

// ---------------------------------------------------------------- points

inline std::uint64_t linear_index(const Shape3& s, const Index3& p) {
  return static_cast<std::uint64_t>(p[0]) +
         static_cast<std::uint64_t>(s.nx) * (static_cast<std::uint64_t>(p[1]) + static_cast<std::uint64_t>(s.ny) * p[2]);
}

/// Weights D(x)^alpha over the voxels of `local` (0 off-mask), where D is the
/// EDT of the crop min-max normalised over the mask. When all weights
/// vanish the mask is weighted uniformly.
inline std::vector<double> point_weights(const BinaryMask3D& local, double alpha) {
  const ScalarField d = edt(local);
  float lo = std::numeric_limits<float>::max(), hi = 0;
  for (std::size_t i = 0; i < local.size(); ++i)
    if (local[i]) {
      lo = std::min(lo, d[i]);
      hi = std::max(hi, d[i]);
    }
  std::vector<double> w(local.size(), 0.0);
  double total = 0;
  for (std::size_t i = 0; i < local.size(); ++i) {
    if (!local[i]) continue;
    const double D = hi > lo ? (d[i] - lo) / (hi - lo) : 1.0;
    w[i] = std::pow(D, alpha);
    total += w[i];
  }
  if (!(total > 0))
    for (std::size_t i = 0; i < local.size(); ++i) w[i] = local[i] ? 1.0 : 0.0;
  return w;
}

inline std::size_t sample_weighted(const std::vector<double>& w, Rng& rng) {
  double total = 0;
  for (double v : w) total += v;
  double r = rng.uniform01() * total;
  std::size_t last = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (w[i] <= 0) continue;
    last = i;
    if (r < w[i]) return i;
    r -= w[i];
  }
  return last;
}

/// Global voxel drawn by the D^alpha law over the component.
inline Index3 sample_point(const ErrorComponent& c, double alpha, Rng& rng) {
  const std::size_t k = sample_weighted(point_weights(c.local, alpha), rng);
  const Index3 p = c.local.coords(k);
  return {p[0] + c.bbox.lo[0], p[1] + c.bbox.lo[1], p[2] + c.bbox.lo[2]};
}

/// Ball of `radius` around `center`, scaled to a soft mask by its own EDT
/// divided by the maximum (1.0 at the centre). Clipped to the volume.
inline SparseField render_soft_ball(const Shape3& volume, const Index3& center, double radius) {
  if (radius < 1) throw std::invalid_argument("render_soft_ball: radius must be >= 1");
  const int R = static_cast<int>(std::floor(radius));
  Shape3 ls{1, 1, 1};
  Index3 lo{};
  for (int a = 0; a < 3; ++a) {
    ls[a] = volume[a] == 1 ? 1 : 2 * R + 3;
    lo[a] = volume[a] == 1 ? center[a] : center[a] - R - 1;
  }
  BinaryMask3D ball(ls, 0);
  for (int z = 0; z < ls.nz; ++z)
    for (int y = 0; y < ls.ny; ++y)
      for (int x = 0; x < ls.nx; ++x) {
        const double dx = lo[0] + x - center[0], dy = lo[1] + y - center[1], dz = lo[2] + z - center[2];
        ball(x, y, z) = dx * dx + dy * dy + dz * dz <= radius * radius;
      }
  const ScalarField soft = edt(ball, true);
  SparseField out;
  for (int z = 0; z < ls.nz; ++z)
    for (int y = 0; y < ls.ny; ++y)
      for (int x = 0; x < ls.nx; ++x) {
        const Index3 g{lo[0] + x, lo[1] + y, lo[2] + z};
        if (!ball(x, y, z) || !volume.contains(g)) continue;
        out.index.push_back(linear_index(volume, g));
        out.value.push_back(soft(x, y, z));
      }
  return out;
}

inline InteractionRecord simulate_point(const ErrorComponent& c, double alpha, double radius, Rng& rng) {
  InteractionRecord r;
  r.kind = InteractionKind::point;
  r.polarity = polarity_for(c.kind);
  r.center = sample_point(c, alpha, rng);
  r.radius = radius;
  r.geometry = render_soft_ball(c.volume, *r.center, radius);
  r.anchor = {linear_index(c.volume, *r.center)};
  return r;
}

// ---------------------------------------------------------------- boxes

struct BoxAugOptions {
  double jitter = 0.05;  // per boundary, fraction of the extent
  double shift = 0.05;   // whole box, fraction of the extent
  double scale_lo = 0.8, scale_hi = 1.2;
  double p_uniform_scale = 0.3;
};

struct BoxAugParams {
  std::array<double, 3> jitter_lo{0, 0, 0}, jitter_hi{0, 0, 0}, shift{0, 0, 0};
  std::array<double, 3> scale{1, 1, 1};
  bool uniform_scale = false;

  static BoxAugParams identity() { return {}; }
};

inline BoxAugParams draw_box_params(int dims, Rng& rng, const BoxAugOptions& opt = {}) {
  BoxAugParams p;
  for (int a = 0; a < dims; ++a) {
    p.jitter_lo[a] = rng.uniform(-opt.jitter, opt.jitter);
    p.jitter_hi[a] = rng.uniform(-opt.jitter, opt.jitter);
  }
  for (int a = 0; a < dims; ++a) p.shift[a] = rng.uniform(-opt.shift, opt.shift);
  p.uniform_scale = rng.bernoulli(opt.p_uniform_scale);
  if (p.uniform_scale) {
    const double s = rng.uniform(opt.scale_lo, opt.scale_hi);
    for (int a = 0; a < dims; ++a) p.scale[a] = s;
  } else {
    for (int a = 0; a < dims; ++a) p.scale[a] = rng.uniform(opt.scale_lo, opt.scale_hi);
  }
  return p;
}

/// Jitter each boundary, shift, scale about the centre, round, clamp to
/// `bounds`. Only the first `dims` axes are touched. nullopt when the
/// result has zero extent.
inline std::optional<Box3> apply_box_params(const Box3& tight, const BoxAugParams& p, const Shape3& bounds, int dims) {
  Box3 out = tight;
  for (int a = 0; a < dims; ++a) {
    const double d = tight.extent(a);
    const double lo = tight.lo[a] + (p.jitter_lo[a] + p.shift[a]) * d;
    const double hi = tight.hi[a] + (p.jitter_hi[a] + p.shift[a]) * d;
    const double c = 0.5 * (lo + hi), half = 0.5 * (hi - lo) * p.scale[a];
    out.lo[a] = std::clamp(static_cast<int>(std::floor(c - half + 0.5)), 0, bounds[a]);
    out.hi[a] = std::clamp(static_cast<int>(std::floor(c + half + 0.5)), 0, bounds[a]);
    if (out.hi[a] <= out.lo[a]) return std::nullopt;
  }
  return out;
}

/// One retry on a degenerate result, then the tight box.
inline Box3 augment_box(const Box3& tight, const Shape3& bounds, int dims, Rng& rng, const BoxAugOptions& opt = {}) {
  for (int attempt = 0; attempt < 2; ++attempt)
    if (auto b = apply_box_params(tight, draw_box_params(dims, rng, opt), bounds, dims)) return *b;
  return tight;
}

// ---------------------------------------------------------------- slice helpers

/// The component's pixels on one slice, as a mask of the full slice shape.
inline Mask2D component_slice(const ErrorComponent& c, const SliceRef& ref) {
  const Shape3 ss = slice_shape(c.volume, ref.axis);
  Mask2D out(ss, 0);
  const auto ax = in_plane_axes(ref.axis);
  const int n = normal_axis(ref.axis);
  if (ref.index < c.bbox.lo[n] || ref.index >= c.bbox.hi[n]) return out;
  for (int v = c.bbox.lo[ax[1]]; v < c.bbox.hi[ax[1]]; ++v)
    for (int u = c.bbox.lo[ax[0]]; u < c.bbox.hi[ax[0]]; ++u)
      if (c.contains(slice_to_volume(ref, u, v))) out(u, v) = 1;
  return out;
}

/// Slice-plane values lifted to sorted global indices.
template <typename T>
SparseField lift_slice(const Grid<T>& plane, const SliceRef& ref, const Shape3& volume) {
  SparseField f;
  const Shape3& ps = plane.shape();
  for (int v = 0; v < ps.ny; ++v)
    for (int u = 0; u < ps.nx; ++u) {
      const T val = plane(u, v);
      if (val == T{}) continue;
      f.index.push_back(linear_index(volume, slice_to_volume(ref, u, v)));
      f.value.push_back(static_cast<float>(val));
    }
  return f;
}

inline Mask2D fill_box2d(const Shape3& slice, const Box3& b) {
  Mask2D m(slice, 0);
  for (int y = b.lo[1]; y < b.hi[1]; ++y)
    for (int x = b.lo[0]; x < b.hi[0]; ++x) m(x, y) = 1;
  return m;
}

/// Tight box of a 2D mask, augmented (or with `fixed` parameters).
inline Box3 bbox2d_geometry(const Mask2D& mask, Rng& rng, const BoxAugOptions& opt = {},
                            const BoxAugParams* fixed = nullptr) {
  require_2d(mask.shape(), "bbox2d_geometry");
  const Box3 tight = bounding_box(mask);
  if (tight.empty()) throw std::invalid_argument("bbox2d_geometry: empty mask");
  if (fixed) return apply_box_params(tight, *fixed, mask.shape(), 2).value_or(tight);
  return augment_box(tight, mask.shape(), 2, rng, opt);
}

// ---------------------------------------------------------------- lasso

struct LassoOptions {
  double close_factor = 0.15;   // r_c = max(1, round(close_factor * m))
  double dilate_factor = 0.10;  // r_d = max(1, round(dilate_factor * m))
  double cap_factor = 0.25;     // per-axis displacement cap, times that axis's median
  double deform_scale = 1.0;    // 0 disables the deformation
  int node_spacing = 8;
};

/// Medians of the directional EDT over the mask: per axis, and pooled.
struct DirectionalMedians {
  std::array<double, 2> axis{0, 0};
  double pooled = 0;
};

inline DirectionalMedians directional_medians(const Mask2D& mask) {
  const auto d = directional_edt(mask);
  DirectionalMedians m;
  std::vector<float> pool;
  for (int a = 0; a < 2; ++a) {
    m.axis[a] = masked_median(d[a], mask);
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) pool.push_back(d[a][i]);
  }
  if (!pool.empty()) {
    const std::size_t mid = (pool.size() - 1) / 2;
    std::nth_element(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(mid), pool.end());
    m.pooled = pool[mid];
  }
  return m;
}

/// Smooth 2D warp whose per-axis amplitude is u * cap_factor * median_a,
/// u ~ U(0, 1). Returns the input unchanged when deform_scale is 0.
inline Mask2D deform_slice(const Mask2D& m, const DirectionalMedians& med, double cap_factor, double deform_scale,
                           int node_spacing, Rng& rng) {
  if (deform_scale == 0.0) return m;
  std::vector<double> amp(2);
  for (int a = 0; a < 2; ++a) amp[a] = rng.uniform01() * cap_factor * med.axis[a] * deform_scale;
  return warp2d(m, random_displacement(m.shape(), amp, rng, node_spacing));
}

struct LassoResult {
  Mask2D coarse;  // close then dilate; contains the source mask
  Mask2D lasso;   // largest region of the deformed coarse mask
  int r_close = 1, r_dilate = 1;
};

inline LassoResult lasso_geometry(const Mask2D& mask, Rng& rng, const LassoOptions& opt = {}) {
  require_2d(mask.shape(), "lasso_geometry");
  if (!any(mask)) throw std::invalid_argument("lasso_geometry: empty mask");
  const DirectionalMedians med = directional_medians(mask);
  LassoResult r;
  r.r_close = std::max(1, static_cast<int>(std::lround(opt.close_factor * med.pooled)));
  r.r_dilate = std::max(1, static_cast<int>(std::lround(opt.dilate_factor * med.pooled)));
  r.coarse = dilate(morphology(mask, MorphOp::close, r.r_close), r.r_dilate);
  const Mask2D warped = deform_slice(r.coarse, med, opt.cap_factor, opt.deform_scale, opt.node_spacing, rng);
  r.lasso = largest_component(any(warped) ? warped : r.coarse, Connectivity::vertex);
  return r;
}

// ---------------------------------------------------------------- scribbles

enum class ScribbleKind { center, line, contour };

inline const char* to_string(ScribbleKind k) {
  return k == ScribbleKind::center ? "center" : k == ScribbleKind::line ? "line" : "contour";
}

struct ScribbleOptions {
  bool truncate = true;
  double min_keep = 0.25;  // kept fraction of the extent, per axis
  int redraws = 3;
  double cap_factor = 0.25;
  double deform_scale = 1.0;
  int erosion_radius = -1;  // contour; -1: max(1, round(0.1 * pooled median))
  std::optional<std::array<Index3, 2>> line_endpoints;  // pinned instead of drawn
  int node_spacing = 8;
};

struct ScribbleResult {
  ScribbleKind kind = ScribbleKind::center;
  Mask2D pre_deformation;  // truncated stroke, inside the source mask
  Mask2D skeleton;         // skeleton of the deformed stroke
  Mask2D scribble;         // skeleton dilated to the requested width
};

/// 8-connected digital segment between two pixels.
inline std::vector<std::array<int, 2>> bresenham(int x0, int y0, int x1, int y1) {
  std::vector<std::array<int, 2>> pts;
  const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
  const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    pts.push_back({x0, y0});
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
  return pts;
}

/// Keeps a random sub-range of the stroke's extent on each axis, covering
/// at least min_keep of it. Empty results are redrawn; after the last
/// redraw the stroke is returned untruncated.
inline Mask2D truncate_stroke(const Mask2D& s, Rng& rng, double min_keep, int redraws) {
  const Box3 b = bounding_box(s);
  if (b.empty()) return s;
  for (int attempt = 0; attempt <= redraws; ++attempt) {
    std::array<int, 2> lo{}, hi{};
    for (int a = 0; a < 2; ++a) {
      const int e = b.extent(a);
      const int keep = static_cast<int>(rng.integer(std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(min_keep * e))), e));
      lo[a] = static_cast<int>(rng.integer(b.lo[a], b.hi[a] - keep));
      hi[a] = lo[a] + keep;
    }
    Mask2D t(s.shape(), 0);
    bool nonempty = false;
    for (int y = lo[1]; y < hi[1]; ++y)
      for (int x = lo[0]; x < hi[0]; ++x)
        if (s(x, y)) {
          t(x, y) = 1;
          nonempty = true;
        }
    if (nonempty) return t;
  }
  return s;
}

inline ScribbleResult scribble_geometry(const Mask2D& mask, ScribbleKind kind, int width, Rng& rng,
                                        const ScribbleOptions& opt = {}) {
  require_2d(mask.shape(), "scribble_geometry");
  if (!any(mask)) throw std::invalid_argument("scribble_geometry: empty mask");
  if (width < 1) throw std::invalid_argument("scribble_geometry: width must be >= 1");
  const DirectionalMedians med = directional_medians(mask);
  ScribbleResult r;
  r.kind = kind;
  Mask2D stroke(mask.shape(), 0);
  switch (kind) {
    case ScribbleKind::center:
      stroke = skeletonize2d(mask);
      break;
    case ScribbleKind::line: {
      std::array<Index3, 2> ends{};
      if (opt.line_endpoints) {
        ends = *opt.line_endpoints;
      } else {
        std::vector<std::size_t> fg;
        for (std::size_t i = 0; i < mask.size(); ++i)
          if (mask[i]) fg.push_back(i);
        ends[0] = mask.coords(fg[rng.below(fg.size())]);
        ends[1] = mask.coords(fg[rng.below(fg.size())]);
      }
      for (const auto& p : bresenham(ends[0][0], ends[0][1], ends[1][0], ends[1][1]))
        if (mask.shape().contains({p[0], p[1], 0}) && mask(p[0], p[1])) stroke(p[0], p[1]) = 1;
      break;
    }
    case ScribbleKind::contour: {
      const int re = opt.erosion_radius >= 0 ? opt.erosion_radius
                                             : std::max(1, static_cast<int>(std::lround(0.1 * med.pooled)));
      const Mask2D eroded = erode(mask, re);
      stroke = inner_border(any(eroded) ? eroded : mask);
      break;
    }
  }
  if (opt.truncate && kind != ScribbleKind::line) stroke = truncate_stroke(stroke, rng, opt.min_keep, opt.redraws);
  r.pre_deformation = stroke;
  const Mask2D warped = deform_slice(stroke, med, opt.cap_factor, opt.deform_scale, opt.node_spacing, rng);
  r.skeleton = skeletonize2d(any(warped) ? warped : stroke);
  r.scribble = width > 1 ? dilate(r.skeleton, (width - 1) / 2.0) : r.skeleton;
  return r;
}

// ---------------------------------------------------------------- 3D boxes

inline Box3 bbox3d_geometry(const ErrorComponent& c, Rng& rng, const BoxAugOptions& opt = {},
                            const BoxAugParams* fixed = nullptr) {
  const int dims = c.volume.is_2d() ? 2 : 3;
  if (fixed) return apply_box_params(c.bbox, *fixed, c.volume, dims).value_or(c.bbox);
  return augment_box(c.bbox, c.volume, dims, rng, opt);
}

inline SparseField render_box(const Shape3& volume, const Box3& b) {
  SparseField f;
  f.index.reserve(b.voxels());
  for (int z = b.lo[2]; z < b.hi[2]; ++z)
    for (int y = b.lo[1]; y < b.hi[1]; ++y)
      for (int x = b.lo[0]; x < b.hi[0]; ++x) f.index.push_back(linear_index(volume, {x, y, z}));
  f.value.assign(f.index.size(), 1.0f);
  return f;
}

// ---------------------------------------------------------------- malformed segmentations

struct MalformOptions {
  double cutoff_prob = 0.3;             // per axis
  double amp_lo = 0.05, amp_hi = 0.15;  // displacement amplitude, times the longest bbox edge
  bool deform = true;
  std::optional<MorphOp> op;  // drawn uniformly when unset
  int radius = -1;            // drawn from {1, 2} when negative; 0 = no morphology
  int node_spacing = 8;
};

/// Clears every voxel beyond plane `k` of `axis` (above it, or below it).
inline void apply_cutoff(BinaryMask3D& m, int axis, int k, bool drop_above) {
  for (std::size_t i = 0; i < m.size(); ++i) {
    const int c = m.coords(i)[axis];
    if (drop_above ? c > k : c < k) m[i] = 0;
  }
}

/// Smooth warp, one morphology op, then random per-axis cut-offs. Work
/// happens in a crop around the object large enough for every step.
inline BinaryMask3D generate_malformed_segmentation(const BinaryMask3D& gt, Rng& rng, const MalformOptions& opt = {}) {
  const Box3 b = bounding_box(gt);
  if (b.empty()) return gt;
  const Shape3& s = gt.shape();
  const int dims = s.is_2d() ? 2 : 3;
  int longest = 0;
  for (int a = 0; a < dims; ++a) longest = std::max(longest, b.extent(a));

  std::vector<double> amp(static_cast<std::size_t>(dims), 0.0);
  for (auto& v : amp) v = rng.uniform(opt.amp_lo, opt.amp_hi) * longest;
  const int op_index = static_cast<int>(rng.below(4));
  const int radius = opt.radius >= 0 ? opt.radius : static_cast<int>(rng.integer(1, 2));
  const MorphOp op = opt.op.value_or(static_cast<MorphOp>(op_index));

  const int margin = static_cast<int>(std::ceil(opt.deform ? *std::max_element(amp.begin(), amp.end()) : 0.0)) + radius + 2;
  Box3 work = b;
  for (int a = 0; a < dims; ++a) {
    work.lo[a] = std::max(0, b.lo[a] - margin);
    work.hi[a] = std::min(s[a], b.hi[a] + margin);
  }
  BinaryMask3D local = crop(gt, work);
  if (opt.deform) local = warp(local, random_displacement(local.shape(), amp, rng, opt.node_spacing));
  if (radius > 0) local = morphology(local, op, radius);
  BinaryMask3D out(s, 0, gt.spacing());
  paste(out, local, work.lo);

  for (int a = 0; a < dims; ++a) {
    if (!rng.bernoulli(opt.cutoff_prob)) continue;
    const Box3 cur = bounding_box(out);
    if (cur.empty()) break;
    const int k = static_cast<int>(rng.integer(cur.lo[a], cur.hi[a] - 1));
    apply_cutoff(out, a, k, rng.bernoulli(0.5));
  }
  return out;
}

inline BinaryMask3D generate_malformed_segmentation(const BinaryMask3D& gt, double cutoff_prob, Rng& rng) {
  MalformOptions opt;
  opt.cutoff_prob = cutoff_prob;
  return generate_malformed_segmentation(gt, rng, opt);
}

// ---------------------------------------------------------------- records

struct SimulationConfig {
  double alpha = 8.0;
  double point_radius = 4.0;
  int scribble_width = 3;
  std::optional<ScribbleKind> scribble_kind;  // uniform over the three when unset
  BoxAugOptions box;
  LassoOptions lasso;
  ScribbleOptions scribble;
};

inline std::vector<std::uint64_t> lifted_indices(const Mask2D& plane, const SliceRef& ref, const Shape3& volume) {
  return lift_slice(plane, ref, volume).index;
}

/// One interaction of `kind` derived from component `c`, positive for FN
/// and negative for FP.
inline InteractionRecord simulate_interaction(InteractionKind kind, const ErrorComponent& c, Rng& rng,
                                              const SimulationConfig& cfg = {}) {
  if (kind == InteractionKind::point) return simulate_point(c, cfg.alpha, cfg.point_radius, rng);
  InteractionRecord r;
  r.kind = kind;
  r.polarity = polarity_for(c.kind);
  if (kind == InteractionKind::bbox3d) {
    const Box3 b = bbox3d_geometry(c, rng, cfg.box);
    r.box = b;
    r.geometry = render_box(c.volume, b);
    r.anchor = SparseField::from_grid(c.full_mask()).index;
    return r;
  }
  if (!is_slice_kind(kind)) throw std::invalid_argument("simulate_interaction: unsupported kind");
  const SliceRef ref = sample_slice(c, rng);
  r.slice = ref;
  const Mask2D plane = component_slice(c, ref);
  switch (kind) {
    case InteractionKind::bbox2d: {
      const Box3 b = bbox2d_geometry(plane, rng, cfg.box);
      const auto ax = in_plane_axes(ref.axis);
      Box3 vb;
      vb.lo[ax[0]] = b.lo[0];
      vb.hi[ax[0]] = b.hi[0];
      vb.lo[ax[1]] = b.lo[1];
      vb.hi[ax[1]] = b.hi[1];
      vb.lo[normal_axis(ref.axis)] = ref.index;
      vb.hi[normal_axis(ref.axis)] = ref.index + 1;
      r.box = vb;
      r.geometry = lift_slice(fill_box2d(plane.shape(), b), ref, c.volume);
      r.anchor = lifted_indices(plane, ref, c.volume);
      break;
    }
    case InteractionKind::lasso: {
      const LassoResult l = lasso_geometry(plane, rng, cfg.lasso);
      r.geometry = lift_slice(l.lasso, ref, c.volume);
      r.anchor = lifted_indices(plane, ref, c.volume);
      break;
    }
    default: {
      const ScribbleKind sk = cfg.scribble_kind.value_or(static_cast<ScribbleKind>(rng.below(3)));
      const ScribbleResult s = scribble_geometry(plane, sk, cfg.scribble_width, rng, cfg.scribble);
      r.geometry = lift_slice(s.scribble, ref, c.volume);
      r.anchor = lifted_indices(s.pre_deformation, ref, c.volume);
    }
  }
  return r;
}

inline InteractionRecord initial_mask_record(const BinaryMask3D& mask) {
  InteractionRecord r;
  r.kind = InteractionKind::initial_mask;
  r.polarity = Polarity::positive;
  r.mask = std::make_shared<const BinaryMask3D>(mask);
  r.geometry = SparseField::from_grid(mask);
  return r;
}

}  // namespace interseg
