#pragma once

// Training-side sampling: case weights, target selection with ambiguity
// combinations and pseudo-labels, patch extraction, and augmentation.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "interseg/instances.hpp"
#include "interseg/interactions.hpp"
#include "interseg/volio.hpp"

namespace interseg {

// ---------------------------------------------------------------- case weights

struct CaseSpec {
  std::string id;
  std::size_t objects = 0;
};

struct DatasetSpec {
  std::string id;
  double weight = 1.0;
  std::vector<CaseSpec> cases;
};

/// p(case) ∝ weight · (√|ds| / |ds|) · √objects, flattened in dataset then
/// case order. Each dataset's budget is weight·√|ds| when all its cases
/// have one object.
inline std::vector<double> case_sampling_weights(const std::vector<DatasetSpec>& datasets) {
  std::vector<double> w;
  for (const DatasetSpec& ds : datasets) {
    if (!(ds.weight > 0)) throw std::invalid_argument("dataset " + ds.id + ": weight must be positive");
    const double n = static_cast<double>(ds.cases.size());
    for (const CaseSpec& c : ds.cases) w.push_back(ds.weight * (std::sqrt(n) / n) * std::sqrt(static_cast<double>(c.objects)));
  }
  if (w.empty()) throw std::invalid_argument("case_sampling_weights: no cases");
  double total = 0;
  for (double x : w) total += x;
  if (!(total > 0)) throw std::invalid_argument("case_sampling_weights: every case has zero objects");
  for (double& x : w) x /= total;
  return w;
}

// ---------------------------------------------------------------- targets

/// A named union of semantic classes drawn with a fixed probability.
struct AmbiguityCombo {
  std::string name;
  std::vector<int> classes;
  double probability = 0;
};

/// The remaining probability is split uniformly over the instances of
/// `remainder_classes` (default: classes named by no combo).
struct AmbiguityRules {
  std::vector<AmbiguityCombo> combos;
  std::optional<std::vector<int>> remainder_classes;

  bool empty() const { return combos.empty(); }
};

/// Accepts either a bare list of combos or {"combos": [...], "remainder_classes": [...]}.
/// A combo is {"name": str, "classes": [int], "p": float}.
inline AmbiguityRules parse_ambiguity(const nlohmann::json& j) {
  AmbiguityRules r;
  if (j.is_null()) return r;
  const nlohmann::json& combos = j.is_array() ? j : j.value("combos", nlohmann::json::array());
  double total = 0;
  for (const auto& c : combos) {
    AmbiguityCombo k;
    k.name = c.at("name").get<std::string>();
    k.classes = c.at("classes").get<std::vector<int>>();
    k.probability = c.at("p").get<double>();
    if (k.probability < 0 || k.classes.empty()) throw std::invalid_argument("ambiguity combo " + k.name + " invalid");
    total += k.probability;
    r.combos.push_back(std::move(k));
  }
  if (total > 1 + 1e-12) throw std::invalid_argument("ambiguity probabilities exceed 1");
  if (j.is_object() && j.contains("remainder_classes"))
    r.remainder_classes = j.at("remainder_classes").get<std::vector<int>>();
  return r;
}

struct TargetSpec {
  enum class Kind { instance, combo, pseudo } kind = Kind::instance;
  std::string name;                // combo name
  std::vector<std::int32_t> ids;   // instance ids (1-based)
  std::size_t pseudo_index = 0;

  bool operator==(const TargetSpec&) const = default;
};

struct SamplingCase {
  InstanceMap labels;
  std::vector<BinaryMask3D> pseudo;  // machine-generated objects
};

/// Distribution over real targets: ambiguity combos at their fixed
/// probabilities (combos whose classes are all absent are dropped), the rest
/// uniform over remainder instances; renormalized when either part is empty.
inline std::vector<std::pair<TargetSpec, double>> target_distribution(const InstanceMap& labels,
                                                                      const AmbiguityRules& rules = {}) {
  const int n = labels.count();
  if (n == 0) throw std::invalid_argument("target_distribution: case without instances");
  std::vector<std::pair<TargetSpec, double>> out;
  double combo_mass = 0;
  std::set<int> named;
  for (const AmbiguityCombo& c : rules.combos) {
    named.insert(c.classes.begin(), c.classes.end());
    TargetSpec t;
    t.kind = TargetSpec::Kind::combo;
    t.name = c.name;
    for (int i = 0; i < n; ++i)
      if (std::find(c.classes.begin(), c.classes.end(), labels.instance_class[static_cast<std::size_t>(i)]) !=
          c.classes.end())
        t.ids.push_back(i + 1);
    if (t.ids.empty() || c.probability == 0) continue;
    combo_mass += c.probability;
    out.emplace_back(std::move(t), c.probability);
  }
  std::vector<std::int32_t> rest;
  for (int i = 0; i < n; ++i) {
    const int cls = labels.instance_class[static_cast<std::size_t>(i)];
    const bool in_rest = rules.remainder_classes
                             ? std::find(rules.remainder_classes->begin(), rules.remainder_classes->end(), cls) !=
                                   rules.remainder_classes->end()
                             : !named.contains(cls);
    if (in_rest) rest.push_back(i + 1);
  }
  double rest_mass = rest.empty() ? 0 : 1 - combo_mass;
  double total = combo_mass + rest_mass;
  if (!(total > 0)) {  // nothing applies: uniform over all instances
    rest.clear();
    for (int i = 0; i < n; ++i) rest.push_back(i + 1);
    out.clear();
    rest_mass = total = 1;
  }
  for (std::int32_t id : rest) {
    TargetSpec t;
    t.ids = {id};
    out.emplace_back(std::move(t), rest_mass / static_cast<double>(rest.size()));
  }
  for (auto& [t, p] : out) p /= total;
  return out;
}

/// One Bernoulli(pseudo_prob) draw, then either a uniform pseudo-label (real
/// target when none exist) or a draw from target_distribution.
inline TargetSpec sample_target(const SamplingCase& c, const AmbiguityRules& rules, Rng& rng,
                                double pseudo_prob = 0.2) {
  if (c.labels.count() == 0 && c.pseudo.empty()) throw std::invalid_argument("sample_target: empty case");
  const bool pseudo = rng.bernoulli(pseudo_prob);
  if ((pseudo && !c.pseudo.empty()) || c.labels.count() == 0) {
    TargetSpec t;
    t.kind = TargetSpec::Kind::pseudo;
    t.pseudo_index = rng.below(c.pseudo.size());
    return t;
  }
  const auto dist = target_distribution(c.labels, rules);
  double u = rng.uniform01();
  for (const auto& [t, p] : dist) {
    if (u < p) return t;
    u -= p;
  }
  return dist.back().first;
}

inline BinaryMask3D target_mask(const SamplingCase& c, const TargetSpec& t) {
  if (t.kind == TargetSpec::Kind::pseudo) return c.pseudo.at(t.pseudo_index);
  const LabelMap3D& lab = c.labels.instances;
  BinaryMask3D m(lab.shape(), 0, lab.spacing());
  for (std::size_t i = 0; i < lab.size(); ++i)
    if (lab[i] && std::find(t.ids.begin(), t.ids.end(), lab[i]) != t.ids.end()) m[i] = 1;
  return m;
}

// ---------------------------------------------------------------- patches

/// Patch of `shape` whose voxel shape/2 sits on `center`; zero outside.
template <typename T>
Grid<T> extract_patch(const Grid<T>& g, const Index3& center, const Shape3& shape) {
  if (!g.shape().contains(center)) throw std::invalid_argument("extract_patch: center outside volume");
  Box3 b;
  for (int a = 0; a < 3; ++a) {
    b.lo[a] = center[a] - shape[a] / 2;
    b.hi[a] = b.lo[a] + shape[a];
  }
  return crop(g, b, T{});
}

/// Patch centre inside the target, by the same law as point prompts.
inline Index3 pick_center(const BinaryMask3D& target, Rng& rng, double alpha = 8.0) {
  return sample_point(whole_mask_component(target, ErrorKind::FN), alpha, rng);
}

// ---------------------------------------------------------------- augmentation

struct AugmentOptions {
  double p_scale = 0.3;
  double p_independent_axes = 0.6;
  double scale_lo = 0.5, scale_hi = 2.0;
  double p_transpose = 0.5;
  double p_negate = 0.1;
};

struct AugmentTrace {
  bool scaled = false;
  Vec3 factors{1, 1, 1};
  bool transposed = false;
  std::array<int, 3> perm{0, 1, 2};
  bool negated = false;
};

struct Augmented {
  Volume3D image;
  BinaryMask3D target;
  AugmentTrace trace;
};

/// Output axis a reads input axis perm[a].
template <typename T>
Grid<T> permute_axes(const Grid<T>& g, const std::array<int, 3>& perm) {
  const Shape3& s = g.shape();
  const Shape3 os{s[perm[0]], s[perm[1]], s[perm[2]]};
  Vec3 sp{};
  for (int a = 0; a < 3; ++a) sp[a] = g.spacing()[perm[a]];
  Grid<T> out(os, T{}, sp);
  Index3 src{};
  for (int z = 0; z < os.nz; ++z)
    for (int y = 0; y < os.ny; ++y)
      for (int x = 0; x < os.nx; ++x) {
        src[perm[0]] = x;
        src[perm[1]] = y;
        src[perm[2]] = z;
        out(x, y, z) = g.at(src);
      }
  return out;
}

namespace detail {

/// Zoom by `f` about the grid centre in a fixed frame; samples falling
/// outside the input read as 0.
inline Volume3D scale_trilinear(const Volume3D& g, const Vec3& f) {
  const Shape3& s = g.shape();
  Volume3D out(s, 0.0f, g.spacing());
  std::array<std::vector<double>, 3> src;
  for (int a = 0; a < 3; ++a) {
    const double c = (s[a] - 1) / 2.0;
    for (int i = 0; i < s[a]; ++i) src[a].push_back(c + (i - c) / f[a]);
  }
  auto val = [&](int x, int y, int z) -> double {
    if (x < 0 || y < 0 || z < 0 || x >= s.nx || y >= s.ny || z >= s.nz) return 0.0;
    return g(x, y, z);
  };
  for (int z = 0; z < s.nz; ++z)
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x) {
        const double sx = src[0][x], sy = src[1][y], sz = src[2][z];
        const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy)),
                  z0 = static_cast<int>(std::floor(sz));
        const double wx = sx - x0, wy = sy - y0, wz = sz - z0;
        double acc = 0;
        for (int dz = 0; dz < 2; ++dz)
          for (int dy = 0; dy < 2; ++dy)
            for (int dx = 0; dx < 2; ++dx) {
              const double w = (dx ? wx : 1 - wx) * (dy ? wy : 1 - wy) * (dz ? wz : 1 - wz);
              if (w != 0) acc += w * val(x0 + dx, y0 + dy, z0 + dz);
            }
        out(x, y, z) = static_cast<float>(acc);
      }
  return out;
}

inline BinaryMask3D scale_nearest(const BinaryMask3D& g, const Vec3& f) {
  const Shape3& s = g.shape();
  BinaryMask3D out(s, 0, g.spacing());
  std::array<std::vector<int>, 3> src;
  for (int a = 0; a < 3; ++a) {
    const double c = (s[a] - 1) / 2.0;
    for (int i = 0; i < s[a]; ++i) src[a].push_back(static_cast<int>(std::floor(c + (i - c) / f[a] + 0.5)));
  }
  for (int z = 0; z < s.nz; ++z)
    for (int y = 0; y < s.ny; ++y)
      for (int x = 0; x < s.nx; ++x) {
        const Index3 p{src[0][x], src[1][y], src[2][z]};
        if (s.contains(p)) out(x, y, z) = g.at(p);
      }
  return out;
}

}  // namespace detail

/// In order: z-score; scale with p_scale (independent per-axis factors with
/// p_independent_axes, else one shared factor); a uniformly chosen
/// non-identity axis permutation with p_transpose; negation with p_negate.
/// Flat grids scale and permute only in-plane. Every branch flag is drawn
/// even when its branch is off, so streams stay aligned across options.
inline Augmented augment(const Volume3D& image, const BinaryMask3D& target, Rng& rng, const AugmentOptions& opt = {}) {
  require_same_shape(image, target, "augment");
  Augmented r{image, target, {}};
  zscore_inplace(r.image);
  const int dims = image.shape().is_2d() ? 2 : 3;

  r.trace.scaled = rng.bernoulli(opt.p_scale);
  const bool independent = rng.bernoulli(opt.p_independent_axes);
  if (r.trace.scaled) {
    const double shared = rng.uniform(opt.scale_lo, opt.scale_hi);
    for (int a = 0; a < dims; ++a) r.trace.factors[a] = independent ? rng.uniform(opt.scale_lo, opt.scale_hi) : shared;
    r.image = detail::scale_trilinear(r.image, r.trace.factors);
    r.target = detail::scale_nearest(r.target, r.trace.factors);
  }

  r.trace.transposed = rng.bernoulli(opt.p_transpose);
  if (r.trace.transposed) {
    static constexpr std::array<std::array<int, 3>, 5> k3d{
        {{0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}}};
    r.trace.perm = dims == 2 ? std::array<int, 3>{1, 0, 2} : k3d[rng.below(k3d.size())];
    r.image = permute_axes(r.image, r.trace.perm);
    r.target = permute_axes(r.target, r.trace.perm);
  }

  r.trace.negated = rng.bernoulli(opt.p_negate);
  if (r.trace.negated)
    for (float& v : r.image) v = -v;
  return r;
}

}  // namespace interseg
