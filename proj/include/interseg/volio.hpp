#pragma once

// Raw+sidecar volumes, case manifests and case loading.
//
// Raw format: `<stem>.raw` holds little-endian voxels in x-fastest order;
// `<stem>.json` holds {"shape": [nx, ny, nz], "spacing": [sx, sy, sz],
// "dtype": "float32" | "uint8" | "int16" | "int32"}.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "interseg/instances.hpp"
#include "interseg/nifti.hpp"

namespace interseg {

namespace fs = std::filesystem;
using json = nlohmann::json;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- raw

inline fs::path raw_sidecar(const fs::path& raw) {
  fs::path p = raw;
  return p.replace_extension(".json");
}

template <typename T>
void write_raw(const Grid<T>& g, const fs::path& raw_path, NiftiType type = NiftiType::float32) {
  const int bpv = bytes_per_voxel(type);
  std::vector<unsigned char> bytes(g.size() * static_cast<std::size_t>(bpv));
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = static_cast<double>(g[i]);
    unsigned char* p = bytes.data() + i * static_cast<std::size_t>(bpv);
    if (type != NiftiType::float32 && v != std::floor(v))
      throw NiftiError(NiftiErrc::unrepresentable, "non-integral value in integer raw volume");
    switch (type) {
      case NiftiType::uint8:
        if (v < 0 || v > 255) throw NiftiError(NiftiErrc::unrepresentable, "value out of uint8 range");
        p[0] = static_cast<unsigned char>(v);
        break;
      case NiftiType::int16:
        if (v < -32768 || v > 32767) throw NiftiError(NiftiErrc::unrepresentable, "value out of int16 range");
        nifti_detail::store_le<std::int16_t>(p, static_cast<std::int16_t>(v));
        break;
      case NiftiType::int32:
        nifti_detail::store_le<std::int32_t>(p, static_cast<std::int32_t>(v));
        break;
      default: {
        const auto f = static_cast<float>(g[i]);
        if (!std::isfinite(f)) throw NiftiError(NiftiErrc::unrepresentable, "non-finite value in raw volume");
        nifti_detail::store_le<float>(p, f);
      }
    }
  }
  std::ofstream out(raw_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + raw_path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  const char* names[] = {"", "", "uint8", "", "int16", "", "", "", "int32"};
  const std::string dtype = type == NiftiType::float32 ? "float32" : names[static_cast<int>(type)];
  const json side = {{"shape", {g.shape().nx, g.shape().ny, g.shape().nz}},
                     {"spacing", {g.spacing()[0], g.spacing()[1], g.spacing()[2]}},
                     {"dtype", dtype}};
  std::ofstream js(raw_sidecar(raw_path));
  if (!js) throw IoError("cannot write sidecar for " + raw_path.string());
  js << side.dump(2) << '\n';
}

inline Volume3D read_raw(const fs::path& raw_path) {
  std::ifstream js(raw_sidecar(raw_path));
  if (!js) throw IoError("missing sidecar for " + raw_path.string());
  json side;
  try {
    side = json::parse(js);
  } catch (const json::exception& e) {
    throw IoError("bad sidecar for " + raw_path.string() + ": " + e.what());
  }
  const auto shape_v = side.at("shape").get<std::vector<int>>();
  if (shape_v.size() != 3) throw IoError("sidecar shape must have 3 entries");
  Vec3 spacing{1, 1, 1};
  if (side.contains("spacing")) {
    const auto sp = side["spacing"].get<std::vector<double>>();
    if (sp.size() != 3) throw IoError("sidecar spacing must have 3 entries");
    spacing = {sp[0], sp[1], sp[2]};
  }
  const NiftiType type = nifti_type_from_string(side.value("dtype", std::string("float32")));
  const Shape3 shape{shape_v[0], shape_v[1], shape_v[2]};
  Volume3D out(shape, 0.0f, spacing);
  const int bpv = bytes_per_voxel(type);
  std::vector<unsigned char> bytes(out.size() * static_cast<std::size_t>(bpv));
  std::ifstream in(raw_path, std::ios::binary);
  if (!in) throw IoError("cannot open " + raw_path.string());
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size())
    throw NiftiError(NiftiErrc::truncated, raw_path.string() + ": shorter than sidecar shape");
  const bool swap = !nifti_detail::kHostLittle;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const unsigned char* p = bytes.data() + i * static_cast<std::size_t>(bpv);
    switch (type) {
      case NiftiType::uint8: out[i] = p[0]; break;
      case NiftiType::int16: out[i] = nifti_detail::load<std::int16_t>(p, swap); break;
      case NiftiType::int32: out[i] = static_cast<float>(nifti_detail::load<std::int32_t>(p, swap)); break;
      default: out[i] = nifti_detail::load<float>(p, swap);
    }
  }
  return out;
}

// ---------------------------------------------------------------- dispatch by extension

inline bool is_raw_path(const fs::path& p) { return p.extension() == ".raw"; }

inline Volume3D read_volume(const fs::path& p) {
  return is_raw_path(p) ? read_raw(p) : read_nifti(p.string()).data;
}

inline LabelMap3D read_labels(const fs::path& p) {
  const Volume3D v = read_volume(p);
  LabelMap3D out(v.shape(), 0, v.spacing());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= 0 && v[i] == std::floor(v[i])))
      throw NiftiError(NiftiErrc::unrepresentable, p.string() + ": labels must be non-negative integers");
    out[i] = static_cast<std::int32_t>(v[i]);
  }
  return out;
}

template <typename T>
void write_volume(const Grid<T>& g, const fs::path& p, NiftiType type) {
  if (is_raw_path(p))
    write_raw(g, p, type);
  else
    write_nifti(g, p.string(), type);
}

// ---------------------------------------------------------------- manifests

struct DatasetEntry {
  std::string id;
  double weight = 1.0;
  CleanupConfig cleanup;
  json ambiguity = json::array();  // parsed by the sampling module
};

struct CaseManifest {
  std::string id;
  std::string dataset;
  fs::path image;
  fs::path label;
  std::optional<fs::path> scribbles;  // label volume: 1 positive, 2 negative
  double weight = 1.0;                // manual weight of the dataset
  CleanupConfig cleanup;
};

struct Manifest {
  std::map<std::string, DatasetEntry> datasets;
  std::vector<CaseManifest> cases;
};

inline CleanupRadius parse_cleanup_radius(const json& j) {
  CleanupRadius r;
  r.open = j.value("open", 0);
  r.close = j.value("close", 0);
  if (r.open < 0 || r.close < 0) throw IoError("cleanup radii must be >= 0");
  return r;
}

inline CleanupConfig parse_cleanup(const json& j) {
  CleanupConfig c;
  if (j.is_null()) return c;
  if (j.contains("default")) c.fallback = parse_cleanup_radius(j["default"]);
  if (j.contains("classes"))
    for (const auto& [k, v] : j["classes"].items()) c.per_class[std::stoi(k)] = parse_cleanup_radius(v);
  return c;
}

/// Relative paths are resolved against `base_dir`. Referenced files must
/// exist; shapes are checked when a case is loaded.
inline Manifest parse_manifest(const json& j, const fs::path& base_dir) {
  Manifest m;
  if (j.contains("datasets")) {
    for (const auto& [id, d] : j["datasets"].items()) {
      DatasetEntry e;
      e.id = id;
      e.weight = d.value("weight", 1.0);
      if (!(e.weight > 0)) throw IoError("dataset '" + id + "': weight must be > 0");
      e.cleanup = parse_cleanup(d.value("cleanup", json()));
      if (d.contains("ambiguity")) e.ambiguity = d["ambiguity"];
      m.datasets[id] = std::move(e);
    }
  }
  auto resolve = [&](const std::string& p) {
    fs::path q(p);
    return q.is_absolute() ? q : base_dir / q;
  };
  for (const auto& c : j.at("cases")) {
    CaseManifest cm;
    cm.id = c.at("id").get<std::string>();
    cm.dataset = c.value("dataset", std::string("default"));
    cm.image = resolve(c.at("image").get<std::string>());
    cm.label = resolve(c.at("label").get<std::string>());
    if (c.contains("scribbles")) cm.scribbles = resolve(c["scribbles"].get<std::string>());
    if (!m.datasets.count(cm.dataset)) m.datasets[cm.dataset] = DatasetEntry{cm.dataset, 1.0, {}, json::array()};
    const DatasetEntry& ds = m.datasets[cm.dataset];
    cm.weight = ds.weight;
    cm.cleanup = ds.cleanup;
    for (const fs::path* p : {&cm.image, &cm.label})
      if (!fs::exists(*p)) throw IoError("case '" + cm.id + "': missing file " + p->string());
    if (cm.scribbles && !fs::exists(*cm.scribbles))
      throw IoError("case '" + cm.id + "': missing file " + cm.scribbles->string());
    m.cases.push_back(std::move(cm));
  }
  return m;
}

inline Manifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw IoError("manifest " + path.string() + ": " + e.what());
  }
  return parse_manifest(j, path.parent_path());
}

// ---------------------------------------------------------------- cases

/// z-score over all voxels. Zero (or non-finite) std yields all zeros and
/// returns false.
inline bool zscore_inplace(Volume3D& v) {
  double sum = 0, sq = 0;
  for (float x : v) sum += x;
  const double n = static_cast<double>(v.size());
  const double mean = sum / n;
  for (float x : v) sq += (x - mean) * (x - mean);
  const double sd = std::sqrt(sq / n);
  if (!(sd > 0) || !std::isfinite(sd)) {
    std::fill(v.begin(), v.end(), 0.0f);
    return false;
  }
  for (float& x : v) x = static_cast<float>((x - mean) / sd);
  return true;
}

struct LoadedCase {
  std::string id;
  Volume3D image;
  InstanceMap labels;
  bool degenerate_std = false;
};

inline LoadedCase prepare_case(std::string id, Volume3D image, const LabelMap3D& semantic,
                               const CleanupConfig& cleanup) {
  require_same_shape(image, semantic, "load_case");
  LoadedCase c;
  c.id = std::move(id);
  c.image = std::move(image);
  c.degenerate_std = !zscore_inplace(c.image);
  c.labels = instances_from_semantic(semantic, cleanup);
  return c;
}

inline LoadedCase load_case(const CaseManifest& m) {
  return prepare_case(m.id, read_volume(m.image), read_labels(m.label), m.cleanup);
}

}  // namespace interseg
