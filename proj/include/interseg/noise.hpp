#pragma once

// Gradient (Perlin) noise and smooth random displacement fields.

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "interseg/grid.hpp"
#include "interseg/rng.hpp"

namespace interseg {

/// Classic gradient noise over an unbounded lattice, periodic every 256
/// cells. Fade 6t^5 - 15t^4 + 10t^3; gradients from 8 fixed directions in
/// 2D and the 12 cube-edge directions in 3D, selected through a seeded
/// permutation table. Noise is exactly 0 at lattice points.
class PerlinNoise {
 public:
  explicit PerlinNoise(Rng& rng) {
    std::array<int, 256> p{};
    std::iota(p.begin(), p.end(), 0);
    for (int i = 255; i > 0; --i) std::swap(p[i], p[rng.below(static_cast<std::uint64_t>(i) + 1)]);
    for (int i = 0; i < 512; ++i) perm_[i] = p[i & 255];
  }

  double eval(double x, double y) const {
    const double fx = std::floor(x), fy = std::floor(y);
    const int X = static_cast<int>(static_cast<long long>(fx) & 255);
    const int Y = static_cast<int>(static_cast<long long>(fy) & 255);
    x -= fx;
    y -= fy;
    const double u = fade(x), v = fade(y);
    const int aa = perm_[perm_[X] + Y], ab = perm_[perm_[X] + Y + 1];
    const int ba = perm_[perm_[X + 1] + Y], bb = perm_[perm_[X + 1] + Y + 1];
    const double r = lerp(v, lerp(u, grad2(aa, x, y), grad2(ba, x - 1, y)),
                          lerp(u, grad2(ab, x, y - 1), grad2(bb, x - 1, y - 1)));
    return std::clamp(r, -1.0, 1.0);
  }

  double eval(double x, double y, double z) const {
    const double fx = std::floor(x), fy = std::floor(y), fz = std::floor(z);
    const int X = static_cast<int>(static_cast<long long>(fx) & 255);
    const int Y = static_cast<int>(static_cast<long long>(fy) & 255);
    const int Z = static_cast<int>(static_cast<long long>(fz) & 255);
    x -= fx;
    y -= fy;
    z -= fz;
    const double u = fade(x), v = fade(y), w = fade(z);
    const int A = perm_[X] + Y, AA = perm_[A] + Z, AB = perm_[A + 1] + Z;
    const int B = perm_[X + 1] + Y, BA = perm_[B] + Z, BB = perm_[B + 1] + Z;
    const double r =
        lerp(w,
             lerp(v, lerp(u, grad3(perm_[AA], x, y, z), grad3(perm_[BA], x - 1, y, z)),
                  lerp(u, grad3(perm_[AB], x, y - 1, z), grad3(perm_[BB], x - 1, y - 1, z))),
             lerp(v, lerp(u, grad3(perm_[AA + 1], x, y, z - 1), grad3(perm_[BA + 1], x - 1, y, z - 1)),
                  lerp(u, grad3(perm_[AB + 1], x, y - 1, z - 1), grad3(perm_[BB + 1], x - 1, y - 1, z - 1))));
    return std::clamp(r, -1.0, 1.0);
  }

 private:
  static double fade(double t) { return t * t * t * (t * (t * 6 - 15) + 10); }
  static double lerp(double t, double a, double b) { return a + t * (b - a); }
  static double grad2(int h, double x, double y) {
    switch (h & 7) {
      case 0: return x;
      case 1: return -x;
      case 2: return y;
      case 3: return -y;
      case 4: return x + y;
      case 5: return x - y;
      case 6: return -x + y;
      default: return -x - y;
    }
  }
  static double grad3(int h, double x, double y, double z) {
    switch (h % 12) {
      case 0: return x + y;
      case 1: return -x + y;
      case 2: return x - y;
      case 3: return -x - y;
      case 4: return x + z;
      case 5: return -x + z;
      case 6: return x - z;
      case 7: return -x - z;
      case 8: return y + z;
      case 9: return -y + z;
      case 10: return y - z;
      default: return -y - z;
    }
  }

  std::array<int, 512> perm_{};
};

/// Noise sampled at voxel centres' integer coordinates divided by
/// cell_size, so voxels whose coordinates are multiples of cell_size hit
/// lattice points. A 2D shape (nz == 1) uses 2D noise.
inline ScalarField perlin(const Shape3& shape, double cell_size, Rng& rng) {
  if (cell_size < 2) throw std::invalid_argument("perlin: cell_size must be >= 2");
  const PerlinNoise noise(rng);
  ScalarField out(shape, 0.0f);
  for (int z = 0; z < shape.nz; ++z)
    for (int y = 0; y < shape.ny; ++y)
      for (int x = 0; x < shape.nx; ++x) {
        const double v = shape.is_2d() ? noise.eval(x / cell_size, y / cell_size)
                                       : noise.eval(x / cell_size, y / cell_size, z / cell_size);
        out(x, y, z) = static_cast<float>(v);
      }
  return out;
}

inline ScalarField perlin2d(int nx, int ny, double cell_size, Rng& rng) { return perlin({nx, ny, 1}, cell_size, rng); }
inline ScalarField perlin3d(const Shape3& s, double cell_size, Rng& rng) { return perlin(s, cell_size, rng); }

/// One displacement component per spatial axis (2 for slices, 3 for volumes).
using DisplacementField = std::vector<ScalarField>;

inline DisplacementField zero_displacement(const Shape3& s) {
  return DisplacementField(s.is_2d() ? 2 : 3, ScalarField(s, 0.0f));
}

/// Smooth random scalar field in [-1, 1]: independent N(0,1) values on a
/// coarse lattice with `node_spacing` voxels between nodes, linearly
/// interpolated and rescaled so the largest magnitude is 1.
inline ScalarField smooth_unit_field(const Shape3& s, int node_spacing, Rng& rng) {
  std::array<int, 3> nodes{};
  for (int a = 0; a < 3; ++a) nodes[a] = s[a] == 1 ? 1 : (s[a] - 1) / node_spacing + 2;
  std::vector<double> lattice(static_cast<std::size_t>(nodes[0]) * nodes[1] * nodes[2]);
  for (double& v : lattice) v = rng.normal();
  auto node = [&](int i, int j, int k) {
    return lattice[static_cast<std::size_t>(i) + static_cast<std::size_t>(nodes[0]) * (j + static_cast<std::size_t>(nodes[1]) * k)];
  };
  ScalarField out(s, 0.0f);
  double peak = 0.0;
  std::vector<double> tmp(out.size());
  for (int z = 0; z < s.nz; ++z)
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x) {
        const double gx = static_cast<double>(x) / node_spacing, gy = static_cast<double>(y) / node_spacing,
                     gz = static_cast<double>(z) / node_spacing;
        const int ix = std::min(static_cast<int>(gx), nodes[0] - 1), iy = std::min(static_cast<int>(gy), nodes[1] - 1),
                  iz = std::min(static_cast<int>(gz), nodes[2] - 1);
        const int jx = std::min(ix + 1, nodes[0] - 1), jy = std::min(iy + 1, nodes[1] - 1),
                  jz = std::min(iz + 1, nodes[2] - 1);
        const double tx = gx - ix, ty = gy - iy, tz = gz - iz;
        const double c00 = node(ix, iy, iz) * (1 - tx) + node(jx, iy, iz) * tx;
        const double c10 = node(ix, jy, iz) * (1 - tx) + node(jx, jy, iz) * tx;
        const double c01 = node(ix, iy, jz) * (1 - tx) + node(jx, iy, jz) * tx;
        const double c11 = node(ix, jy, jz) * (1 - tx) + node(jx, jy, jz) * tx;
        const double v = (c00 * (1 - ty) + c10 * ty) * (1 - tz) + (c01 * (1 - ty) + c11 * ty) * tz;
        tmp[out.index(x, y, z)] = v;
        peak = std::max(peak, std::abs(v));
      }
  for (std::size_t i = 0; i < tmp.size(); ++i) out[i] = peak > 0 ? static_cast<float>(tmp[i] / peak) : 0.0f;
  return out;
}

/// Smooth random displacement whose component a is bounded by |amplitude[a]|.
inline DisplacementField random_displacement(const Shape3& s, const std::vector<double>& amplitude, Rng& rng,
                                             int node_spacing = 8) {
  const std::size_t dims = s.is_2d() ? 2 : 3;
  if (amplitude.size() != dims) throw std::invalid_argument("random_displacement: one amplitude per axis required");
  DisplacementField f;
  for (std::size_t a = 0; a < dims; ++a) {
    ScalarField c = smooth_unit_field(s, node_spacing, rng);
    for (float& v : c) v = static_cast<float>(v * amplitude[a]);
    f.push_back(std::move(c));
  }
  return f;
}

}  // namespace interseg
