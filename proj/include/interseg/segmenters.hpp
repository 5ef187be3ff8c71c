#pragma once

// The segmenter plug-in contract and reference implementations that need no
// network: ground-truth oracle, prompt-driven noisy oracle, region growing,
// and a bridge to an external process.
//
// A segmenter sees one patch at a time through PatchRequest, which refers to
// full-resolution data and materializes only what is asked for. The patch
// covers `region` of the volume, resampled onto `out_shape` (trilinear for
// image and channels, nearest for masks). `region` may extend past the
// volume; those voxels read as 0.

#include <array>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <deque>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include "interseg/components.hpp"
#include "interseg/interactions.hpp"
#include "interseg/noise.hpp"
#include "interseg/prompts.hpp"
#include "interseg/resample.hpp"

namespace interseg {

struct PatchRequest {
  const PromptChannels* channels = nullptr;
  const BinaryMask3D* gt = nullptr;              // only oracles read it
  const ScalarField* previous_override = nullptr;  // replaces channel 1 when set
  Box3 region;
  Shape3 out_shape;

  bool native() const { return region.shape() == out_shape; }
  const Shape3& volume_shape() const { return channels->shape(); }

  /// Channel c (0 image, 1 previous prediction, 2.. prompts) on the patch grid.
  ScalarField channel(int c) const {
    ScalarField d = c == 1 && previous_override ? crop(*previous_override, region, 0.0f) : channels->dense(c, region);
    if (native()) return d;
    return resample(d, out_shape, Interp::trilinear);
  }

  BinaryMask3D gt_patch() const {
    if (!gt) throw std::logic_error("PatchRequest: segmenter needs ground truth");
    BinaryMask3D d = crop(*gt, region, std::uint8_t{0});
    if (native()) return d;
    return resample(d, out_shape, Interp::nearest);
  }

  /// Full-resolution voxel sampled by each patch voxel under nearest
  /// interpolation, per axis; -1 where the region leaves the volume.
  std::array<std::vector<int>, 3> nearest_source() const {
    std::array<std::vector<int>, 3> src;
    const Shape3& s = volume_shape();
    for (int a = 0; a < 3; ++a) {
      const int n = out_shape[a], e = region.extent(a);
      src[a].resize(static_cast<std::size_t>(n));
      for (int i = 0; i < n; ++i) {
        const int k = std::min(static_cast<int>(std::floor((i + 0.5) * e / n)), e - 1);
        const int v = region.lo[a] + (native() ? i : k);
        src[a][static_cast<std::size_t>(i)] = v >= 0 && v < s[a] ? v : -1;
      }
    }
    return src;
  }
};

class Segmenter {
 public:
  virtual ~Segmenter() = default;
  virtual std::string name() const = 0;
  /// Probabilities in [0, 1] with shape req.out_shape; deterministic in req.
  virtual ScalarField predict(const PatchRequest& req) = 0;
  virtual bool needs_gt() const { return false; }
};

// ---------------------------------------------------------------- oracles

/// Returns the ground truth of the patch, ignoring prompts.
class GtOracle final : public Segmenter {
 public:
  std::string name() const override { return "gt"; }
  bool needs_gt() const override { return true; }
  ScalarField predict(const PatchRequest& req) override { return to_field(req.gt_patch()); }
};

/// Ground truth corrupted by a fixed malformation whose error voxels are
/// withdrawn as prompt mass accumulates. An error voxel p survives while
/// priority(p) < max(0, 1 - mass / tau), where priority is smooth noise at
/// full-resolution coordinates mapped into [0, 1] and mass is the undecayed
/// total of all applied prompts. Surviving errors are nested in the mass, so
/// Dice against gt is nondecreasing in it.
class NoisyOracle final : public Segmenter {
 public:
  explicit NoisyOracle(std::uint64_t seed, double tau = 500.0, double noise_cell = 6.0)
      : seed_(seed), tau_(tau), cell_(noise_cell) {
    if (!(tau > 0)) throw std::invalid_argument("NoisyOracle: tau must be positive");
  }

  std::string name() const override { return "noisy"; }
  bool needs_gt() const override { return true; }
  double tau() const { return tau_; }

  double keep_fraction(double mass) const { return std::max(0.0, 1.0 - mass / tau_); }

  ScalarField predict(const PatchRequest& req) override {
    if (!req.gt) throw std::logic_error("NoisyOracle: ground truth required");
    const Cache& c = cache_for(*req.gt);
    const double f = keep_fraction(req.channels->cumulative_mass());
    const auto src = req.nearest_source();
    ScalarField out(req.out_shape, 0.0f);
    const Shape3& o = req.out_shape;
    for (int z = 0; z < o.nz; ++z) {
      const int sz = src[2][static_cast<std::size_t>(z)];
      for (int y = 0; y < o.ny; ++y) {
        const int sy = src[1][static_cast<std::size_t>(y)];
        for (int x = 0; x < o.nx; ++x) {
          const int sx = src[0][static_cast<std::size_t>(x)];
          if (sx < 0 || sy < 0 || sz < 0) continue;
          const bool g = (*req.gt)(sx, sy, sz) != 0;
          const bool m = c.malformed(sx, sy, sz) != 0;
          const bool v = g != m && priority(c, sx, sy, sz) < f ? m : g;
          out(x, y, z) = v ? 1.0f : 0.0f;
        }
      }
    }
    return out;
  }

 private:
  struct Cache {
    std::uint64_t key = 0;
    Shape3 shape;
    bool volume_2d = false;
    BinaryMask3D malformed;
    std::unique_ptr<PerlinNoise> noise;
  };

  double priority(const Cache& c, int x, int y, int z) const {
    const double v = c.volume_2d ? c.noise->eval(x / cell_, y / cell_) : c.noise->eval(x / cell_, y / cell_, z / cell_);
    return std::clamp(0.5 + 0.5 * v, 0.0, 1.0);
  }

  static std::uint64_t fingerprint(const BinaryMask3D& m) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < m.size(); ++i)
      if (m[i]) h = (h ^ i) * 0x100000001b3ull;
    return h;
  }

  const Cache& cache_for(const BinaryMask3D& gt) {
    std::lock_guard lock(mu_);
    const std::uint64_t key = fingerprint(gt);
    for (const auto& c : caches_)
      if (c->key == key && c->shape == gt.shape()) return *c;
    auto c = std::make_unique<Cache>();
    c->key = key;
    c->shape = gt.shape();
    c->volume_2d = gt.shape().is_2d();
    Rng rng(seed_, 0x6e6f697379ull);
    c->malformed = any(gt) ? generate_malformed_segmentation(gt, MalformOptions{}.cutoff_prob, rng) : gt;
    Rng nr = rng.split(1);
    c->noise = std::make_unique<PerlinNoise>(nr);
    caches_.push_back(std::move(c));
    if (caches_.size() > 4) caches_.pop_front();
    return *caches_.back();
  }

  std::uint64_t seed_;
  double tau_, cell_;
  std::mutex mu_;
  std::deque<std::unique_ptr<Cache>> caches_;
};

// ---------------------------------------------------------------- region growing

/// Flood fill from positive point and scribble voxels (> 0.5) with
/// 26-connectivity. A neighbour joins when its intensity is within
/// `tolerance` of the running mean of the region so far. Negative point,
/// scribble, box/lasso (and 3D box) voxels > 0.5 are barriers. When a
/// positive box or lasso is present the fill is clipped to its bbox.
class RegionGrow final : public Segmenter {
 public:
  explicit RegionGrow(double tolerance = 0.5) : tol_(tolerance) {}

  std::string name() const override { return "regiongrow"; }

  ScalarField predict(const PatchRequest& req) override {
    const ScalarField img = req.channel(0);
    const Shape3& s = img.shape();
    const int nc = req.channels->channel_count();
    BinaryMask3D barrier(s, 0), seeds(s, 0);
    auto mark = [&](int c, BinaryMask3D& into) {
      const ScalarField f = req.channel(c);
      for (std::size_t i = 0; i < f.size(); ++i)
        if (f[i] > 0.5f) into[i] = 1;
    };
    mark(2, seeds);
    mark(4, seeds);
    for (int c : {3, 5, 7}) mark(c, barrier);
    if (nc > 9) mark(9, barrier);
    BinaryMask3D support(s, 0);
    mark(6, support);
    if (nc > 8) mark(8, support);
    const Box3 clip = any(support) ? bounding_box(support) : Box3::whole(s);

    BinaryMask3D in(s, 0);
    std::deque<std::size_t> queue;
    double sum = 0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < seeds.size(); ++i) {
      if (!seeds[i] || barrier[i] || !clip.contains(seeds.coords(i))) continue;
      in[i] = 1;
      queue.push_back(i);
      sum += img[i];
      ++n;
    }
    if (n == 0) throw std::invalid_argument("RegionGrow: no positive seed in patch");
    const auto offsets = neighbour_offsets(Connectivity::vertex);
    while (!queue.empty()) {
      const Index3 p = img.coords(queue.front());
      queue.pop_front();
      for (const Index3& d : offsets) {
        const Index3 q{p[0] + d[0], p[1] + d[1], p[2] + d[2]};
        if (!clip.contains(q)) continue;
        const std::size_t j = img.index(q);
        if (in[j] || barrier[j]) continue;
        if (std::abs(img[j] - sum / static_cast<double>(n)) > tol_) continue;
        in[j] = 1;
        sum += img[j];
        ++n;
        queue.push_back(j);
      }
    }
    return to_field(in);
  }

 private:
  double tol_;
};

// ---------------------------------------------------------------- subprocess bridge

/// Runs `sh -c command` once per patch. Request on the child's stdin: one
/// line of JSON
///   {"shape":[nx,ny,nz],"channels":C,"names":[...],"dtype":"float32","endian":"little"}
/// followed by C·nx·ny·nz float32 values, channel-major and x-fastest within
/// a channel. Response on stdout: nx·ny·nz float32 little-endian
/// probabilities. Values are clamped to [0, 1]; NaN is an error.
class SubprocessSegmenter final : public Segmenter {
 public:
  explicit SubprocessSegmenter(std::string command) : cmd_(std::move(command)) {
    if (cmd_.empty()) throw std::invalid_argument("SubprocessSegmenter: empty command");
  }

  std::string name() const override { return "subprocess:" + cmd_; }

  ScalarField predict(const PatchRequest& req) override {
    const Shape3& s = req.out_shape;
    const int nc = req.channels->channel_count();
    nlohmann::json head;
    head["shape"] = {s.nx, s.ny, s.nz};
    head["channels"] = nc;
    head["names"] = nlohmann::json::array();
    for (int c = 0; c < nc; ++c) head["names"].push_back(channel_name(c));
    head["dtype"] = "float32";
    head["endian"] = "little";
    std::string payload = head.dump() + "\n";
    const std::size_t hdr = payload.size();
    payload.resize(hdr + static_cast<std::size_t>(nc) * s.voxels() * 4);
    for (int c = 0; c < nc; ++c) {
      const ScalarField f = req.channel(c);
      char* dst = payload.data() + hdr + static_cast<std::size_t>(c) * s.voxels() * 4;
      for (std::size_t i = 0; i < f.size(); ++i) store_f32_le(dst + 4 * i, f[i]);
    }
    const std::string reply = run(payload, s.voxels() * 4);
    ScalarField out(s, 0.0f);
    for (std::size_t i = 0; i < out.size(); ++i) {
      const float v = load_f32_le(reply.data() + 4 * i);
      if (std::isnan(v)) throw std::runtime_error("subprocess segmenter returned NaN");
      out[i] = std::clamp(v, 0.0f, 1.0f);
    }
    return out;
  }

 private:
  static void store_f32_le(char* p, float v) {
    std::uint32_t u;
    std::memcpy(&u, &v, 4);
    for (int b = 0; b < 4; ++b) p[b] = static_cast<char>((u >> (8 * b)) & 0xffu);
  }
  static float load_f32_le(const char* p) {
    std::uint32_t u = 0;
    for (int b = 0; b < 4; ++b) u |= std::uint32_t{static_cast<unsigned char>(p[b])} << (8 * b);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
  }

  std::string run(const std::string& input, std::size_t expect) const {
    int in_pipe[2], out_pipe[2];
    if (pipe(in_pipe) != 0) throw std::runtime_error("subprocess: pipe failed");
    if (pipe(out_pipe) != 0) {
      close(in_pipe[0]);
      close(in_pipe[1]);
      throw std::runtime_error("subprocess: pipe failed");
    }
    const pid_t pid = fork();
    if (pid < 0) throw std::runtime_error("subprocess: fork failed");
    if (pid == 0) {
      dup2(in_pipe[0], STDIN_FILENO);
      dup2(out_pipe[1], STDOUT_FILENO);
      close(in_pipe[0]);
      close(in_pipe[1]);
      close(out_pipe[0]);
      close(out_pipe[1]);
      execl("/bin/sh", "sh", "-c", cmd_.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    // A child that exits early must not kill us through SIGPIPE.
    struct sigaction ign {}, old {};
    ign.sa_handler = SIG_IGN;
    sigaction(SIGPIPE, &ign, &old);
    std::thread writer([fd = in_pipe[1], &input] {
      std::size_t off = 0;
      while (off < input.size()) {
        const ssize_t w = write(fd, input.data() + off, input.size() - off);
        if (w <= 0) break;
        off += static_cast<std::size_t>(w);
      }
      close(fd);
    });
    std::string out;
    char buf[1 << 16];
    for (;;) {
      const ssize_t r = read(out_pipe[0], buf, sizeof buf);
      if (r <= 0) break;
      out.append(buf, static_cast<std::size_t>(r));
    }
    close(out_pipe[0]);
    writer.join();
    int status = 0;
    waitpid(pid, &status, 0);
    sigaction(SIGPIPE, &old, nullptr);
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
      throw std::runtime_error("subprocess segmenter failed: " + cmd_);
    if (out.size() != expect)
      throw std::runtime_error("subprocess segmenter returned " + std::to_string(out.size()) + " bytes, expected " +
                               std::to_string(expect));
    return out;
  }

  std::string cmd_;
};

/// Builds a segmenter from its CLI name: gt, noisy, regiongrow, subprocess:CMD.
inline std::unique_ptr<Segmenter> make_segmenter(const std::string& spec, std::uint64_t seed, double tau = 500.0,
                                                 double tolerance = 0.5) {
  if (spec == "gt") return std::make_unique<GtOracle>();
  if (spec == "noisy") return std::make_unique<NoisyOracle>(seed, tau);
  if (spec == "regiongrow") return std::make_unique<RegionGrow>(tolerance);
  if (spec.rfind("subprocess:", 0) == 0) return std::make_unique<SubprocessSegmenter>(spec.substr(11));
  throw std::invalid_argument("unknown segmenter: " + spec);
}

}  // namespace interseg
