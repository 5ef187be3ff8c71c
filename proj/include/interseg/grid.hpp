#pragma once

// Dense 3D grids in x-fastest order. A 2D image is a grid with nz == 1, so
// every 3D operation applies unchanged to single slices.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace interseg {

using Index3 = std::array<int, 3>;
using Vec3 = std::array<double, 3>;

struct Shape3 {
  int nx = 1, ny = 1, nz = 1;

  constexpr int operator[](int axis) const { return axis == 0 ? nx : axis == 1 ? ny : nz; }
  constexpr int& operator[](int axis) { return axis == 0 ? nx : axis == 1 ? ny : nz; }
  constexpr std::size_t voxels() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  constexpr bool is_2d() const { return nz == 1; }
  constexpr bool contains(const Index3& p) const {
    return p[0] >= 0 && p[1] >= 0 && p[2] >= 0 && p[0] < nx && p[1] < ny && p[2] < nz;
  }
  constexpr bool operator==(const Shape3&) const = default;

  std::string str() const {
    return std::to_string(nx) + "x" + std::to_string(ny) + "x" + std::to_string(nz);
  }
};

template <typename T>
class Grid {
 public:
  using value_type = T;

  Grid() = default;
  explicit Grid(Shape3 shape, T fill = T{}, Vec3 spacing = {1.0, 1.0, 1.0})
      : shape_(validated(shape)), spacing_(spacing), data_(shape.voxels(), fill) {
    for (double s : spacing_)
      if (!(s > 0.0)) throw std::invalid_argument("Grid: spacing must be positive");
  }
  Grid(Shape3 shape, std::vector<T> data, Vec3 spacing = {1.0, 1.0, 1.0})
      : shape_(validated(shape)), spacing_(spacing), data_(std::move(data)) {
    if (data_.size() != shape_.voxels())
      throw std::invalid_argument("Grid: data length does not match shape " + shape_.str());
    for (double s : spacing_)
      if (!(s > 0.0)) throw std::invalid_argument("Grid: spacing must be positive");
  }

  const Shape3& shape() const { return shape_; }
  const Vec3& spacing() const { return spacing_; }
  void set_spacing(const Vec3& s) { spacing_ = s; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t index(int x, int y, int z) const {
    return static_cast<std::size_t>(x) +
           static_cast<std::size_t>(shape_.nx) *
               (static_cast<std::size_t>(y) + static_cast<std::size_t>(shape_.ny) * z);
  }
  std::size_t index(const Index3& p) const { return index(p[0], p[1], p[2]); }
  Index3 coords(std::size_t i) const {
    const auto nx = static_cast<std::size_t>(shape_.nx);
    const auto ny = static_cast<std::size_t>(shape_.ny);
    return {static_cast<int>(i % nx), static_cast<int>((i / nx) % ny),
            static_cast<int>(i / (nx * ny))};
  }

  T& operator()(int x, int y, int z = 0) { return data_[index(x, y, z)]; }
  const T& operator()(int x, int y, int z = 0) const { return data_[index(x, y, z)]; }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }
  T& at(const Index3& p) { return data_[index(p)]; }
  const T& at(const Index3& p) const { return data_[index(p)]; }

  /// Value at p, or `outside` when p lies off the grid.
  T get_or(const Index3& p, T outside) const {
    return shape_.contains(p) ? data_[index(p)] : outside;
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }
  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

  bool operator==(const Grid& o) const { return shape_ == o.shape_ && data_ == o.data_; }

 private:
  static Shape3 validated(Shape3 s) {
    if (s.nx < 1 || s.ny < 1 || s.nz < 1)
      throw std::invalid_argument("Grid: shape components must be >= 1, got " + s.str());
    return s;
  }

  Shape3 shape_{};
  Vec3 spacing_{1.0, 1.0, 1.0};
  std::vector<T> data_;
};

using Volume3D = Grid<float>;
using ScalarField = Grid<float>;
using BinaryMask3D = Grid<std::uint8_t>;
using LabelMap3D = Grid<std::int32_t>;
/// A single slice: BinaryMask3D with nz == 1.
using Mask2D = BinaryMask3D;

template <typename A, typename B>
void require_same_shape(const Grid<A>& a, const Grid<B>& b, const char* what) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(what) + ": shape mismatch " + a.shape().str() +
                                " vs " + b.shape().str());
}

inline void require_2d(const Shape3& s, const char* what) {
  if (!s.is_2d()) throw std::invalid_argument(std::string(what) + ": expected a 2D slice (nz == 1)");
}

inline std::size_t count(const BinaryMask3D& m) {
  return static_cast<std::size_t>(std::count_if(m.begin(), m.end(), [](auto v) { return v != 0; }));
}

inline bool any(const BinaryMask3D& m) {
  return std::any_of(m.begin(), m.end(), [](auto v) { return v != 0; });
}

inline BinaryMask3D complement(const BinaryMask3D& m) {
  BinaryMask3D out(m.shape(), 0, m.spacing());
  for (std::size_t i = 0; i < m.size(); ++i) out[i] = m[i] ? 0 : 1;
  return out;
}

inline BinaryMask3D mask_and(const BinaryMask3D& a, const BinaryMask3D& b) {
  require_same_shape(a, b, "mask_and");
  BinaryMask3D out(a.shape(), 0, a.spacing());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] && b[i]) ? 1 : 0;
  return out;
}

inline BinaryMask3D mask_or(const BinaryMask3D& a, const BinaryMask3D& b) {
  require_same_shape(a, b, "mask_or");
  BinaryMask3D out(a.shape(), 0, a.spacing());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] || b[i]) ? 1 : 0;
  return out;
}

/// a AND NOT b
inline BinaryMask3D mask_minus(const BinaryMask3D& a, const BinaryMask3D& b) {
  require_same_shape(a, b, "mask_minus");
  BinaryMask3D out(a.shape(), 0, a.spacing());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = (a[i] && !b[i]) ? 1 : 0;
  return out;
}

template <typename T>
BinaryMask3D threshold(const Grid<T>& g, T t) {
  BinaryMask3D out(g.shape(), 0, g.spacing());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i] > t ? 1 : 0;
  return out;
}

template <typename T>
ScalarField to_field(const Grid<T>& g) {
  ScalarField out(g.shape(), 0.0f, g.spacing());
  for (std::size_t i = 0; i < g.size(); ++i) out[i] = static_cast<float>(g[i]);
  return out;
}

// ---------------------------------------------------------------- boxes

/// Half-open axis-aligned box [lo, hi).
struct Box3 {
  Index3 lo{0, 0, 0};
  Index3 hi{0, 0, 0};

  int extent(int axis) const { return hi[axis] - lo[axis]; }
  Shape3 shape() const { return {extent(0), extent(1), extent(2)}; }
  bool empty() const { return extent(0) <= 0 || extent(1) <= 0 || extent(2) <= 0; }
  std::size_t voxels() const { return empty() ? 0 : shape().voxels(); }
  bool contains(const Index3& p) const {
    for (int a = 0; a < 3; ++a)
      if (p[a] < lo[a] || p[a] >= hi[a]) return false;
    return true;
  }
  bool inside(const Shape3& s) const {
    for (int a = 0; a < 3; ++a)
      if (lo[a] < 0 || hi[a] > s[a] || lo[a] > hi[a]) return false;
    return true;
  }
  bool operator==(const Box3&) const = default;
  auto operator<=>(const Box3&) const = default;

  static Box3 whole(const Shape3& s) { return {{0, 0, 0}, {s.nx, s.ny, s.nz}}; }
};

inline Box3 intersect(const Box3& a, const Box3& b) {
  Box3 r;
  for (int k = 0; k < 3; ++k) {
    r.lo[k] = std::max(a.lo[k], b.lo[k]);
    r.hi[k] = std::max(r.lo[k], std::min(a.hi[k], b.hi[k]));
  }
  return r;
}

/// Tight bounding box of the nonzero voxels; empty box when there are none.
template <typename T>
Box3 bounding_box(const Grid<T>& g) {
  const Shape3& s = g.shape();
  Box3 b{{s.nx, s.ny, s.nz}, {0, 0, 0}};
  bool found = false;
  for (int z = 0; z < s.nz; ++z)
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x) {
        if (g(x, y, z) == T{}) continue;
        found = true;
        b.lo = {std::min(b.lo[0], x), std::min(b.lo[1], y), std::min(b.lo[2], z)};
        b.hi = {std::max(b.hi[0], x + 1), std::max(b.hi[1], y + 1), std::max(b.hi[2], z + 1)};
      }
  return found ? b : Box3{};
}

/// Copy of the box region; voxels of the box outside the grid read as `pad`.
template <typename T>
Grid<T> crop(const Grid<T>& g, const Box3& box, T pad = T{}) {
  Grid<T> out(box.shape(), pad, g.spacing());
  const Box3 valid = intersect(box, Box3::whole(g.shape()));
  for (int z = valid.lo[2]; z < valid.hi[2]; ++z)
    for (int y = valid.lo[1]; y < valid.hi[1]; ++y)
      for (int x = valid.lo[0]; x < valid.hi[0]; ++x)
        out(x - box.lo[0], y - box.lo[1], z - box.lo[2]) = g(x, y, z);
  return out;
}

/// Writes `patch` into `g` with its origin at box_lo; parts off the grid are dropped.
template <typename T>
void paste(Grid<T>& g, const Grid<T>& patch, const Index3& box_lo) {
  const Shape3& ps = patch.shape();
  const Box3 target{box_lo, {box_lo[0] + ps.nx, box_lo[1] + ps.ny, box_lo[2] + ps.nz}};
  const Box3 valid = intersect(target, Box3::whole(g.shape()));
  for (int z = valid.lo[2]; z < valid.hi[2]; ++z)
    for (int y = valid.lo[1]; y < valid.hi[1]; ++y)
      for (int x = valid.lo[0]; x < valid.hi[0]; ++x)
        g(x, y, z) = patch(x - box_lo[0], y - box_lo[1], z - box_lo[2]);
}

// ---------------------------------------------------------------- slices

/// Orthogonal plane families. The enum value is the label; the grid axis
/// held fixed by each family is given by normal_axis().
enum class SliceAxis : int { axial = 0, coronal = 1, sagittal = 2 };

/// axial planes fix z, coronal planes fix y, sagittal planes fix x.
constexpr int normal_axis(SliceAxis a) { return 2 - static_cast<int>(a); }
constexpr SliceAxis axis_family(int grid_axis) { return static_cast<SliceAxis>(2 - grid_axis); }

/// The two in-plane grid axes, in increasing order; they become (x, y) of
/// the extracted 2D slice.
constexpr std::array<int, 2> in_plane_axes(SliceAxis a) {
  switch (normal_axis(a)) {
    case 0: return {1, 2};
    case 1: return {0, 2};
    default: return {0, 1};
  }
}

inline const char* to_string(SliceAxis a) {
  switch (a) {
    case SliceAxis::axial: return "axial";
    case SliceAxis::coronal: return "coronal";
    default: return "sagittal";
  }
}

struct SliceRef {
  SliceAxis axis = SliceAxis::axial;
  int index = 0;

  bool valid_for(const Shape3& s) const { return index >= 0 && index < s[normal_axis(axis)]; }
  bool operator==(const SliceRef&) const = default;
};

inline Shape3 slice_shape(const Shape3& s, SliceAxis a) {
  const auto ax = in_plane_axes(a);
  return {s[ax[0]], s[ax[1]], 1};
}

/// Volume coordinate of in-plane pixel (u, v) on the referenced slice.
inline Index3 slice_to_volume(const SliceRef& ref, int u, int v) {
  Index3 p{};
  const auto ax = in_plane_axes(ref.axis);
  p[ax[0]] = u;
  p[ax[1]] = v;
  p[normal_axis(ref.axis)] = ref.index;
  return p;
}

template <typename T>
Grid<T> extract_slice(const Grid<T>& g, const SliceRef& ref) {
  if (!ref.valid_for(g.shape())) throw std::out_of_range("extract_slice: slice index out of range");
  const Shape3 ss = slice_shape(g.shape(), ref.axis);
  Grid<T> out(ss);
  for (int v = 0; v < ss.ny; ++v)
    for (int u = 0; u < ss.nx; ++u) out(u, v) = g.at(slice_to_volume(ref, u, v));
  return out;
}

}  // namespace interseg
