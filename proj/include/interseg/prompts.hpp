#pragma once

// Interaction records and the multi-channel prompt state.
//
// Channel layout: 0 image, 1 previous prediction, 2/3 point +/-,
// 4/5 scribble +/-, 6/7 bbox2d+lasso +/-, and with the 3D-box variant
// 8/9 bbox3d +/-. Prompt channels (2..) are stored sparsely because most
// voxels of a large volume never receive a prompt.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "interseg/grid.hpp"
#include "interseg/rng.hpp"

namespace interseg {

enum class InteractionKind { point, scribble, bbox2d, lasso, bbox3d, initial_mask, none };
enum class Polarity { positive, negative };

inline const char* to_string(InteractionKind k) {
  switch (k) {
    case InteractionKind::point: return "point";
    case InteractionKind::scribble: return "scribble";
    case InteractionKind::bbox2d: return "bbox2d";
    case InteractionKind::lasso: return "lasso";
    case InteractionKind::bbox3d: return "bbox3d";
    case InteractionKind::initial_mask: return "initial_mask";
    default: return "none";
  }
}

inline InteractionKind interaction_kind_from_string(const std::string& s) {
  for (auto k : {InteractionKind::point, InteractionKind::scribble, InteractionKind::bbox2d, InteractionKind::lasso,
                 InteractionKind::bbox3d, InteractionKind::initial_mask})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("unknown interaction kind '" + s + "'");
}

inline const char* to_string(Polarity p) { return p == Polarity::positive ? "positive" : "negative"; }

/// Kinds whose error components are fragmented before selection.
inline bool uses_fragmentation(InteractionKind k) {
  return k == InteractionKind::bbox2d || k == InteractionKind::lasso || k == InteractionKind::bbox3d;
}

inline bool is_slice_kind(InteractionKind k) {
  return k == InteractionKind::scribble || k == InteractionKind::bbox2d || k == InteractionKind::lasso;
}

/// Sorted, duplicate-free (linear index, value) pairs.
struct SparseField {
  std::vector<std::uint64_t> index;
  std::vector<float> value;

  std::size_t nnz() const { return index.size(); }
  bool empty() const { return index.empty(); }

  double sum() const {
    double s = 0;
    for (float v : value) s += v;
    return s;
  }
  float peak() const {
    float p = 0;
    for (float v : value) p = std::max(p, v);
    return p;
  }
  void scale(float f) {
    for (float& v : value) v *= f;
  }
  float at(std::uint64_t i) const {
    auto it = std::lower_bound(index.begin(), index.end(), i);
    return (it != index.end() && *it == i) ? value[static_cast<std::size_t>(it - index.begin())] : 0.0f;
  }

  /// Voxel-wise maximum.
  void merge_max(const SparseField& o) {
    SparseField r;
    r.index.reserve(nnz() + o.nnz());
    r.value.reserve(nnz() + o.nnz());
    std::size_t i = 0, j = 0;
    while (i < nnz() || j < o.nnz()) {
      if (j == o.nnz() || (i < nnz() && index[i] < o.index[j])) {
        r.index.push_back(index[i]);
        r.value.push_back(value[i++]);
      } else if (i == nnz() || o.index[j] < index[i]) {
        r.index.push_back(o.index[j]);
        r.value.push_back(o.value[j++]);
      } else {
        r.index.push_back(index[i]);
        r.value.push_back(std::max(value[i++], o.value[j++]));
      }
    }
    *this = std::move(r);
  }

  template <typename T>
  static SparseField from_grid(const Grid<T>& g) {
    SparseField f;
    for (std::size_t i = 0; i < g.size(); ++i)
      if (g[i] != T{}) {
        f.index.push_back(i);
        f.value.push_back(static_cast<float>(g[i]));
      }
    return f;
  }

  bool operator==(const SparseField&) const = default;
};

struct InteractionRecord {
  InteractionKind kind = InteractionKind::none;
  Polarity polarity = Polarity::positive;
  std::optional<SliceRef> slice;
  SparseField geometry;                 // rendered prompt, values in (0, 1]
  std::vector<std::uint64_t> anchor;    // pre-deformation source voxels
  std::optional<Index3> center;         // point
  double radius = 0;                    // point
  std::optional<Box3> box;              // bbox2d (slice-local lifted to volume), bbox3d
  std::shared_ptr<const BinaryMask3D> mask;  // initial_mask
  int iteration = 0;

  std::uint64_t geometry_hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&](const void* p, std::size_t n) {
      const auto* b = static_cast<const unsigned char*>(p);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= b[i];
        h *= 0x100000001b3ull;
      }
    };
    const int k = static_cast<int>(kind), pol = static_cast<int>(polarity);
    mix(&k, sizeof k);
    mix(&pol, sizeof pol);
    mix(geometry.index.data(), geometry.index.size() * sizeof(std::uint64_t));
    mix(geometry.value.data(), geometry.value.size() * sizeof(float));
    if (mask) mix(mask->data().data(), mask->size());
    return h;
  }

  nlohmann::json summary() const {
    nlohmann::json j{{"kind", to_string(kind)}, {"polarity", to_string(polarity)}, {"iteration", iteration},
                     {"voxels", geometry.nnz()}};
    if (slice) j["slice"] = {{"axis", to_string(slice->axis)}, {"index", slice->index}};
    if (center) j["center"] = {(*center)[0], (*center)[1], (*center)[2]};
    if (kind == InteractionKind::point) j["radius"] = radius;
    if (box) j["box"] = {{"lo", {box->lo[0], box->lo[1], box->lo[2]}}, {"hi", {box->hi[0], box->hi[1], box->hi[2]}}};
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(geometry_hash()));
    j["hash"] = hex;
    return j;
  }
};

/// Channel receiving a (kind, polarity); initial masks go to channel 1.
inline int channel_for(InteractionKind k, Polarity p) {
  const int neg = p == Polarity::negative ? 1 : 0;
  switch (k) {
    case InteractionKind::point: return 2 + neg;
    case InteractionKind::scribble: return 4 + neg;
    case InteractionKind::bbox2d:
    case InteractionKind::lasso: return 6 + neg;
    case InteractionKind::bbox3d: return 8 + neg;
    case InteractionKind::initial_mask: return 1;
    default: throw std::invalid_argument("channel_for: no channel for kind");
  }
}

inline const char* channel_name(int c) {
  static const char* names[] = {"image",     "previous",  "point+", "point-", "scribble+",
                                "scribble-", "boxlasso+", "boxlasso-", "bbox3d+", "bbox3d-"};
  return (c >= 0 && c < 10) ? names[c] : "?";
}

/// Prompt values stored at full intensity together with the apply count at
/// which they were written; the current value is base * decay^(now - stamp).
struct DecayingField {
  std::vector<std::uint64_t> index;
  std::vector<float> base;
  std::vector<std::int32_t> stamp;
};

class PromptChannels {
 public:
  static constexpr double kDecay = 0.9;

  explicit PromptChannels(std::shared_ptr<const Volume3D> image, bool box3d_variant = false)
      : image_(std::move(image)), prompts_(box3d_variant ? 8 : 6), powers_{1.0} {
    if (!image_) throw std::invalid_argument("PromptChannels: image required");
  }

  int channel_count() const { return 2 + static_cast<int>(prompts_.size()); }
  bool box3d_variant() const { return prompts_.size() == 8; }
  const Shape3& shape() const { return image_->shape(); }
  const Volume3D& image() const { return *image_; }
  std::shared_ptr<const Volume3D> image_ptr() const { return image_; }

  /// nullptr means "no prediction yet" (all zeros).
  const ScalarField* previous() const { return previous_ ? &*previous_ : nullptr; }
  void set_previous(ScalarField p) {
    require_same_shape(p, *image_, "PromptChannels::set_previous");
    for (float& v : p) v = std::clamp(v, 0.0f, 1.0f);
    previous_ = std::move(p);
  }
  template <typename T>
  void set_previous_mask(const Grid<T>& m) {
    set_previous(to_field(m));
  }

  /// Current values of a prompt channel (2 .. channel_count()-1).
  SparseField prompt(int channel) const {
    const DecayingField& f = field(channel);
    SparseField out;
    out.index = f.index;
    out.value.resize(f.index.size());
    for (std::size_t k = 0; k < f.index.size(); ++k) out.value[k] = current(f, k);
    return out;
  }

  /// Decays every prompt channel by 0.9, then max-renders the record into
  /// its channel. An initial mask replaces channel 1 and decays nothing.
  void apply(const InteractionRecord& rec) { apply_batch({&rec, 1}); }

  /// Several records forming one interaction step: a single decay, then
  /// every record is rendered at full intensity.
  void apply_batch(std::span<const InteractionRecord> recs) {
    bool step = false;
    for (const InteractionRecord& rec : recs) {
      if (rec.kind == InteractionKind::initial_mask) {
        if (!rec.mask) throw std::invalid_argument("apply: initial_mask record without a mask");
        continue;
      }
      const int c = channel_for(rec.kind, rec.polarity);
      if (c >= channel_count()) throw std::invalid_argument("apply: bbox3d channels require the 3D-box variant");
      if (!rec.geometry.empty() && rec.geometry.index.back() >= shape().voxels())
        throw std::out_of_range("apply: geometry outside the volume");
      step = true;
    }
    if (step) {
      ++applied_;
      powers_.push_back(std::pow(kDecay, applied_));
    }
    for (const InteractionRecord& rec : recs) {
      if (rec.kind == InteractionKind::initial_mask) {
        set_previous_mask(*rec.mask);
        continue;
      }
      merge(prompts_[static_cast<std::size_t>(channel_for(rec.kind, rec.polarity) - 2)], rec.geometry);
      cumulative_mass_ += rec.geometry.sum();
    }
  }

  /// Total full-intensity mass of every prompt applied so far (no decay).
  double cumulative_mass() const { return cumulative_mass_; }
  int applied() const { return applied_; }

  /// Current mass of the prompt channels, after decay.
  double current_mass() const {
    double s = 0;
    for (const auto& f : prompts_)
      for (std::size_t k = 0; k < f.index.size(); ++k) s += current(f, k);
    return s;
  }

  /// Dense copy of a channel restricted to a box (off-grid parts are 0).
  ScalarField dense(int channel, const Box3& region) const {
    ScalarField out(region.shape(), 0.0f);
    if (channel == 0 || channel == 1) {
      const ScalarField* src = channel == 0 ? image_.get() : previous();
      if (src) out = crop(*src, region, 0.0f);
      out.set_spacing(image_->spacing());
      return out;
    }
    const DecayingField& f = field(channel);
    const Shape3& s = shape();
    const bool whole = region == Box3::whole(s);
    const auto nx = static_cast<std::uint64_t>(s.nx), ny = static_cast<std::uint64_t>(s.ny);
    for (std::size_t k = 0; k < f.index.size(); ++k) {
      const std::uint64_t i = f.index[k];
      if (whole) {
        out[i] = current(f, k);
        continue;
      }
      const Index3 p{static_cast<int>(i % nx), static_cast<int>((i / nx) % ny), static_cast<int>(i / (nx * ny))};
      if (region.contains(p)) out(p[0] - region.lo[0], p[1] - region.lo[1], p[2] - region.lo[2]) = current(f, k);
    }
    out.set_spacing(image_->spacing());
    return out;
  }
  ScalarField dense(int channel) const { return dense(channel, Box3::whole(shape())); }

  /// `<stem>.raw`: channel-major float32 little-endian, x-fastest within a
  /// channel; `<stem>.json`: descriptor.
  void export_raw(const std::filesystem::path& stem) const {
    std::filesystem::path raw = stem;
    raw += ".raw";
    std::ofstream out(raw, std::ios::binary);
    if (!out) throw std::runtime_error("export_raw: cannot write " + raw.string());
    std::vector<char> buf;
    for (int c = 0; c < channel_count(); ++c) {
      const ScalarField d = dense(c);
      buf.resize(d.size() * 4);
      for (std::size_t i = 0; i < d.size(); ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, &d[i], 4);
        for (int b = 0; b < 4; ++b) buf[4 * i + static_cast<std::size_t>(b)] = static_cast<char>((bits >> (8 * b)) & 0xff);
      }
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    }
    nlohmann::json names = nlohmann::json::array();
    for (int c = 0; c < channel_count(); ++c) names.push_back(channel_name(c));
    const nlohmann::json desc{{"shape", {shape().nx, shape().ny, shape().nz}},
                              {"channels", names},
                              {"dtype", "float32"},
                              {"byte_order", "little"},
                              {"layout", "channel-major, x-fastest"},
                              {"file", raw.filename().string()}};
    std::filesystem::path js = stem;
    js += ".json";
    std::ofstream(js) << desc.dump(2) << '\n';
  }


 private:
  const DecayingField& field(int channel) const {
    if (channel < 2 || channel >= channel_count()) throw std::out_of_range("PromptChannels: bad prompt channel");
    return prompts_[static_cast<std::size_t>(channel - 2)];
  }

  float current(const DecayingField& f, std::size_t k) const {
    return static_cast<float>(f.base[k] * powers_[static_cast<std::size_t>(applied_ - f.stamp[k])]);
  }

  /// Voxel-wise maximum of current values; the newcomer is stamped now.
  void merge(DecayingField& f, const SparseField& g) {
    DecayingField r;
    r.index.reserve(f.index.size() + g.nnz());
    r.base.reserve(r.index.capacity());
    r.stamp.reserve(r.index.capacity());
    auto keep_old = [&](std::size_t i) {
      r.index.push_back(f.index[i]);
      r.base.push_back(f.base[i]);
      r.stamp.push_back(f.stamp[i]);
    };
    auto take_new = [&](std::size_t j) {
      r.index.push_back(g.index[j]);
      r.base.push_back(g.value[j]);
      r.stamp.push_back(applied_);
    };
    std::size_t i = 0, j = 0;
    while (i < f.index.size() || j < g.nnz()) {
      if (j == g.nnz() || (i < f.index.size() && f.index[i] < g.index[j])) {
        keep_old(i++);
      } else if (i == f.index.size() || g.index[j] < f.index[i]) {
        take_new(j++);
      } else {
        if (current(f, i) >= g.value[j])
          keep_old(i);
        else
          take_new(j);
        ++i;
        ++j;
      }
    }
    f = std::move(r);
  }

  std::shared_ptr<const Volume3D> image_;
  std::optional<ScalarField> previous_;
  std::vector<DecayingField> prompts_;
  std::vector<double> powers_;  // powers_[k] = 0.9^k
  double cumulative_mass_ = 0;
  int applied_ = 0;
};

}  // namespace interseg
