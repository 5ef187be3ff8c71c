#pragma once

// Restricted NIfTI-1 single-file reader/writer (.nii and .nii.gz).
//
// Supported: 3D images (dim[0] == 3), datatypes uint8/int16/int32/float32,
// either byte order on read, little-endian on write. Orientation matrices
// are neither interpreted nor written; voxel spacing comes from pixdim.

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <memory>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "interseg/grid.hpp"

namespace interseg {

enum class NiftiErrc {
  io,                    // cannot open / read / write
  bad_header,            // sizeof_hdr is not 348 in either byte order
  bad_magic,             // magic is neither "n+1" nor "ni1"
  unsupported_format,    // detached header/image pair ("ni1")
  unsupported_datatype,  // datatype outside {2, 4, 8, 16}
  bad_dim,               // dim[0] != 3 or non-positive extents
  truncated,             // fewer bytes than the header declares
  unrepresentable,       // value does not fit the requested datatype
};

inline const char* to_string(NiftiErrc c) {
  switch (c) {
    case NiftiErrc::io: return "io";
    case NiftiErrc::bad_header: return "bad_header";
    case NiftiErrc::bad_magic: return "bad_magic";
    case NiftiErrc::unsupported_format: return "unsupported_format";
    case NiftiErrc::unsupported_datatype: return "unsupported_datatype";
    case NiftiErrc::bad_dim: return "bad_dim";
    case NiftiErrc::truncated: return "truncated";
    default: return "unrepresentable";
  }
}

class NiftiError : public std::runtime_error {
 public:
  NiftiError(NiftiErrc code, const std::string& what)
      : std::runtime_error(std::string("nifti ") + to_string(code) + ": " + what), code_(code) {}
  NiftiErrc code() const { return code_; }

 private:
  NiftiErrc code_;
};

enum class NiftiType : std::int16_t { uint8 = 2, int16 = 4, int32 = 8, float32 = 16 };

inline int bytes_per_voxel(NiftiType t) {
  switch (t) {
    case NiftiType::uint8: return 1;
    case NiftiType::int16: return 2;
    default: return 4;
  }
}

inline NiftiType nifti_type_from_string(const std::string& s) {
  if (s == "uint8") return NiftiType::uint8;
  if (s == "int16") return NiftiType::int16;
  if (s == "int32") return NiftiType::int32;
  if (s == "float32") return NiftiType::float32;
  throw NiftiError(NiftiErrc::unsupported_datatype, "unknown datatype name '" + s + "'");
}

/// The header fields the engine reads or writes.
struct NiftiHeader {
  std::int32_t sizeof_hdr = 348;
  std::array<std::int16_t, 8> dim{3, 1, 1, 1, 1, 1, 1, 1};
  NiftiType datatype = NiftiType::float32;
  std::int16_t bitpix = 32;
  std::array<float, 8> pixdim{1, 1, 1, 1, 1, 1, 1, 1};
  float vox_offset = 352.0f;
  float scl_slope = 0.0f;
  float scl_inter = 0.0f;
  std::array<char, 4> magic{'n', '+', '1', '\0'};
  bool big_endian = false;
};

namespace nifti_detail {

inline constexpr std::size_t kHeaderSize = 348;
inline constexpr std::size_t kOffDim = 40, kOffDatatype = 70, kOffBitpix = 72, kOffPixdim = 76,
                                 kOffVoxOffset = 108, kOffSlope = 112, kOffInter = 116, kOffXyztUnits = 123,
                                 kOffMagic = 344;

template <typename T>
T load(const unsigned char* p, bool swap) {
  std::array<unsigned char, sizeof(T)> b{};
  std::memcpy(b.data(), p, sizeof(T));
  if (swap) std::reverse(b.begin(), b.end());
  T v;
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

template <typename T>
void store_le(unsigned char* p, T v) {
  std::array<unsigned char, sizeof(T)> b{};
  std::memcpy(b.data(), &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b.begin(), b.end());
  std::memcpy(p, b.data(), sizeof(T));
}

inline constexpr bool kHostLittle = std::endian::native == std::endian::little;

struct GzCloser {
  void operator()(gzFile_s* f) const {
    if (f) gzclose(f);
  }
};
using GzHandle = std::unique_ptr<gzFile_s, GzCloser>;

/// Reads up to n bytes; returns the count actually read (short on EOF or a corrupt stream).
inline std::size_t read_some(gzFile f, unsigned char* dst, std::size_t n) {
  std::size_t got = 0;
  while (got < n) {
    const auto chunk = static_cast<unsigned>(std::min<std::size_t>(n - got, 1u << 30));
    const int r = gzread(f, dst + got, chunk);
    if (r <= 0) break;
    got += static_cast<std::size_t>(r);
  }
  return got;
}

inline bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace nifti_detail

/// Parses and validates a 348-byte header block.
inline NiftiHeader parse_nifti_header(const unsigned char* raw) {
  using namespace nifti_detail;
  NiftiHeader h;
  const auto le = load<std::int32_t>(raw, !kHostLittle);
  const auto be = load<std::int32_t>(raw, kHostLittle);
  bool swap;
  if (le == 348) {
    swap = !kHostLittle;
    h.big_endian = false;
  } else if (be == 348) {
    swap = kHostLittle;
    h.big_endian = true;
  } else {
    throw NiftiError(NiftiErrc::bad_header, "sizeof_hdr is not 348");
  }
  std::memcpy(h.magic.data(), raw + kOffMagic, 4);
  if (std::memcmp(h.magic.data(), "ni1\0", 4) == 0)
    throw NiftiError(NiftiErrc::unsupported_format, "detached header/image pairs are not supported");
  if (std::memcmp(h.magic.data(), "n+1\0", 4) != 0) throw NiftiError(NiftiErrc::bad_magic, "magic is not n+1");
  for (int i = 0; i < 8; ++i) h.dim[i] = load<std::int16_t>(raw + kOffDim + 2 * i, swap);
  if (h.dim[0] != 3) throw NiftiError(NiftiErrc::bad_dim, "dim[0] = " + std::to_string(h.dim[0]) + ", expected 3");
  for (int i = 1; i <= 3; ++i)
    if (h.dim[i] < 1) throw NiftiError(NiftiErrc::bad_dim, "non-positive extent in dim[" + std::to_string(i) + "]");
  const auto dt = load<std::int16_t>(raw + kOffDatatype, swap);
  if (dt != 2 && dt != 4 && dt != 8 && dt != 16)
    throw NiftiError(NiftiErrc::unsupported_datatype, "datatype " + std::to_string(dt));
  h.datatype = static_cast<NiftiType>(dt);
  h.bitpix = load<std::int16_t>(raw + kOffBitpix, swap);
  for (int i = 0; i < 8; ++i) h.pixdim[i] = load<float>(raw + kOffPixdim + 4 * i, swap);
  h.vox_offset = load<float>(raw + kOffVoxOffset, swap);
  if (!(h.vox_offset >= 348.0f) || h.vox_offset > 1.0e9f)
    throw NiftiError(NiftiErrc::bad_header, "vox_offset out of range");
  h.scl_slope = load<float>(raw + kOffSlope, swap);
  h.scl_inter = load<float>(raw + kOffInter, swap);
  return h;
}

struct NiftiImage {
  NiftiHeader header;
  Volume3D data;  // voxel values after scl_slope/scl_inter
};

inline NiftiImage read_nifti(const std::string& path) {
  using namespace nifti_detail;
  GzHandle f(gzopen(path.c_str(), "rb"));
  if (!f) throw NiftiError(NiftiErrc::io, "cannot open " + path);
  std::array<unsigned char, kHeaderSize> raw{};
  if (read_some(f.get(), raw.data(), kHeaderSize) != kHeaderSize)
    throw NiftiError(NiftiErrc::truncated, path + ": header shorter than 348 bytes");
  NiftiImage img;
  img.header = parse_nifti_header(raw.data());
  const NiftiHeader& h = img.header;

  const auto skip = static_cast<std::size_t>(h.vox_offset) - kHeaderSize;
  std::vector<unsigned char> pad(skip);
  if (read_some(f.get(), pad.data(), skip) != skip) throw NiftiError(NiftiErrc::truncated, path + ": missing extension bytes");

  const Shape3 shape{h.dim[1], h.dim[2], h.dim[3]};
  const std::size_t n = shape.voxels();
  const int bpv = bytes_per_voxel(h.datatype);
  std::vector<unsigned char> bytes(n * static_cast<std::size_t>(bpv));
  if (read_some(f.get(), bytes.data(), bytes.size()) != bytes.size())
    throw NiftiError(NiftiErrc::truncated, path + ": voxel data shorter than declared");
  if (!gzdirect(f.get())) {
    // The payload can decode fully while the gzip trailer is cut off.
    unsigned char sink[4096];
    while (gzread(f.get(), sink, sizeof sink) > 0) {
    }
    int err = Z_OK;
    gzerror(f.get(), &err);
    if (err != Z_OK) throw NiftiError(NiftiErrc::truncated, path + ": gzip stream ends early or is corrupt");
  }

  Vec3 spacing{1, 1, 1};
  for (int a = 0; a < 3; ++a) {
    const float p = std::abs(h.pixdim[a + 1]);
    spacing[a] = (std::isfinite(p) && p > 0) ? p : 1.0;
  }
  img.data = Volume3D(shape, 0.0f, spacing);
  const bool swap = h.big_endian == kHostLittle;
  const bool scale = h.scl_slope != 0.0f && std::isfinite(h.scl_slope);
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned char* p = bytes.data() + i * static_cast<std::size_t>(bpv);
    double v;
    switch (h.datatype) {
      case NiftiType::uint8: v = p[0]; break;
      case NiftiType::int16: v = load<std::int16_t>(p, swap); break;
      case NiftiType::int32: v = load<std::int32_t>(p, swap); break;
      default: {
        const float fv = load<float>(p, swap);
        img.data[i] = scale ? fv * h.scl_slope + h.scl_inter : fv;
        continue;
      }
    }
    img.data[i] = static_cast<float>(scale ? v * h.scl_slope + h.scl_inter : v);
  }
  return img;
}

/// Label maps are read through read_nifti and must hold integral values.
inline LabelMap3D read_nifti_labels(const std::string& path) {
  const NiftiImage img = read_nifti(path);
  LabelMap3D out(img.data.shape(), 0, img.data.spacing());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const float v = img.data[i];
    if (!(v >= 0 && v == std::floor(v) && v <= static_cast<float>(std::numeric_limits<std::int32_t>::max())))
      throw NiftiError(NiftiErrc::unrepresentable, path + ": label values must be non-negative integers");
    out[i] = static_cast<std::int32_t>(v);
  }
  return out;
}

/// Writes a grid; gzip-compressed iff the path ends in ".gz".
template <typename T>
void write_nifti(const Grid<T>& g, const std::string& path, NiftiType type) {
  using namespace nifti_detail;
  const int bpv = bytes_per_voxel(type);
  std::vector<unsigned char> out(352 + g.size() * static_cast<std::size_t>(bpv), 0);
  unsigned char* h = out.data();
  store_le<std::int32_t>(h, 348);
  const Shape3& s = g.shape();
  const std::array<std::int16_t, 8> dim{3, static_cast<std::int16_t>(s.nx), static_cast<std::int16_t>(s.ny),
                                        static_cast<std::int16_t>(s.nz), 1, 1, 1, 1};
  for (int a = 0; a < 3; ++a)
    if (s[a] > std::numeric_limits<std::int16_t>::max())
      throw NiftiError(NiftiErrc::bad_dim, "extent exceeds NIfTI-1 int16 dim");
  for (int i = 0; i < 8; ++i) store_le<std::int16_t>(h + kOffDim + 2 * i, dim[i]);
  store_le<std::int16_t>(h + kOffDatatype, static_cast<std::int16_t>(type));
  store_le<std::int16_t>(h + kOffBitpix, static_cast<std::int16_t>(8 * bpv));
  const std::array<float, 8> pixdim{1.0f, static_cast<float>(g.spacing()[0]), static_cast<float>(g.spacing()[1]),
                                    static_cast<float>(g.spacing()[2]), 1, 1, 1, 1};
  for (int i = 0; i < 8; ++i) store_le<float>(h + kOffPixdim + 4 * i, pixdim[i]);
  store_le<float>(h + kOffVoxOffset, 352.0f);
  store_le<float>(h + kOffSlope, 0.0f);  // 0 = no scaling, keeps float payloads bit-exact
  store_le<float>(h + kOffInter, 0.0f);
  h[kOffXyztUnits] = 2;  // mm
  std::memcpy(h + kOffMagic, "n+1\0", 4);

  unsigned char* d = out.data() + 352;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = static_cast<double>(g[i]);
    unsigned char* p = d + i * static_cast<std::size_t>(bpv);
    auto check_int = [&](double lo, double hi) {
      if (!(v == std::floor(v) && v >= lo && v <= hi))
        throw NiftiError(NiftiErrc::unrepresentable, "value " + std::to_string(v) + " at voxel " + std::to_string(i));
    };
    switch (type) {
      case NiftiType::uint8:
        check_int(0, 255);
        p[0] = static_cast<unsigned char>(v);
        break;
      case NiftiType::int16:
        check_int(-32768, 32767);
        store_le<std::int16_t>(p, static_cast<std::int16_t>(v));
        break;
      case NiftiType::int32:
        check_int(-2147483648.0, 2147483647.0);
        store_le<std::int32_t>(p, static_cast<std::int32_t>(v));
        break;
      default: {
        const auto fv = static_cast<float>(g[i]);
        if (!std::isfinite(fv))
          throw NiftiError(NiftiErrc::unrepresentable, "non-finite value at voxel " + std::to_string(i));
        store_le<float>(p, fv);
      }
    }
  }

  const bool gz = ends_with(path, ".gz");
  GzHandle f(gzopen(path.c_str(), gz ? "wb6" : "wbT"));
  if (!f) throw NiftiError(NiftiErrc::io, "cannot open " + path + " for writing");
  std::size_t put = 0;
  while (put < out.size()) {
    const auto chunk = static_cast<unsigned>(std::min<std::size_t>(out.size() - put, 1u << 30));
    const int w = gzwrite(f.get(), out.data() + put, chunk);
    if (w <= 0) throw NiftiError(NiftiErrc::io, "write failed for " + path);
    put += static_cast<std::size_t>(w);
  }
  if (gzclose(f.release()) != Z_OK) throw NiftiError(NiftiErrc::io, "close failed for " + path);
}

}  // namespace interseg
