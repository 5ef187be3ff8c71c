#pragma once

// Interactive refinement sessions, expert-scribble evaluation, metric
// aggregation and report emission.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <exception>
#include <cstdio>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "interseg/agents.hpp"
#include "interseg/autozoom.hpp"
#include "interseg/error_regions.hpp"
#include "interseg/interactions.hpp"
#include "interseg/metrics.hpp"
#include "interseg/segmenters.hpp"

namespace interseg {

struct SessionConfig {
  AgentKind agent = AgentKind::random;
  std::vector<InteractionKind> kinds{InteractionKind::point, InteractionKind::scribble, InteractionKind::lasso,
                                     InteractionKind::bbox2d};
  std::optional<InteractionKind> initial_kind;  // else the agent's first draw
  double keep_prob = 0.9;
  bool exclude_current = false;
  int followups = 5;
  bool autozoom = true;
  AutoZoomConfig zoom;
  SimulationConfig sim;
  ErrorOptions errors;
  bool timing = false;  // ms stays 0 otherwise, keeping reports byte-stable
};

struct IterationLog {
  int iter = 0;
  InteractionKind kind = InteractionKind::none;  // none: padded after an early exit
  double dice = 0;
  double ms = 0;
  nlohmann::json record;  // interaction summary, null when padded
};

struct SessionLog {
  std::string case_id;
  std::string dataset;
  std::vector<IterationLog> iterations;
  std::optional<BinaryMask3D> final_mask;

  std::vector<double> curve() const {
    std::vector<double> c;
    for (const auto& it : iterations) c.push_back(it.dice);
    return c;
  }
};

/// Bbox of a record's rendered geometry.
inline Box3 geometry_box(const SparseField& g, const Shape3& s) {
  Box3 b{{s.nx, s.ny, s.nz}, {0, 0, 0}};
  const auto nx = static_cast<std::uint64_t>(s.nx), ny = static_cast<std::uint64_t>(s.ny);
  for (std::uint64_t i : g.index) {
    const Index3 p{static_cast<int>(i % nx), static_cast<int>((i / nx) % ny), static_cast<int>(i / (nx * ny))};
    for (int a = 0; a < 3; ++a) {
      b.lo[a] = std::min(b.lo[a], p[a]);
      b.hi[a] = std::max(b.hi[a], p[a] + 1);
    }
  }
  return g.empty() ? Box3::whole(s) : b;
}

namespace detail {

inline BinaryMask3D predict_step(Segmenter& seg, PromptChannels& ch, const BinaryMask3D& gt, const Box3& prompt,
                                 const SessionConfig& cfg) {
  const BinaryMask3D* g = seg.needs_gt() ? &gt : nullptr;
  BinaryMask3D pred = cfg.autozoom ? run_autozoom(seg, ch, g, prompt, cfg.zoom).mask : predict_whole(seg, ch, g);
  ch.set_previous_mask(pred);
  return pred;
}

class Stopwatch {
 public:
  explicit Stopwatch(bool on) : on_(on), t0_(std::chrono::steady_clock::now()) {}
  double ms() const {
    if (!on_) return 0;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  bool on_;
  std::chrono::steady_clock::time_point t0_;
};

}  // namespace detail

/// Iteration 0 prompts from the whole gt as one FN component; iterations
/// 1..followups correct the current prediction. When no error component is
/// left the log is padded with the last Dice. Deterministic in (inputs, rng).
inline SessionLog run_session(std::shared_ptr<const Volume3D> image, const BinaryMask3D& gt, Segmenter& seg,
                              const SessionConfig& cfg, Rng rng) {
  require_same_shape(*image, gt, "run_session");
  if (!any(gt)) throw std::invalid_argument("run_session: empty ground truth");
  if (cfg.followups < 0) throw std::invalid_argument("run_session: followups must be >= 0");
  const bool variant = std::find(cfg.kinds.begin(), cfg.kinds.end(), InteractionKind::bbox3d) != cfg.kinds.end() ||
                       cfg.initial_kind == InteractionKind::bbox3d;
  Rng agent_rng = rng.split("agent");
  Rng sim_rng = rng.split("interaction");
  Agent agent = cfg.initial_kind
                    ? Agent(cfg.agent, cfg.kinds, *cfg.initial_kind, cfg.keep_prob, cfg.exclude_current)
                    : Agent::with_random_start(cfg.agent, cfg.kinds, agent_rng, cfg.keep_prob, cfg.exclude_current);
  PromptChannels ch(image, variant);
  SessionLog log;

  auto step = [&](int iter, InteractionKind kind, const ErrorComponent& c) {
    detail::Stopwatch sw(cfg.timing);
    InteractionRecord rec = simulate_interaction(kind, c, sim_rng, cfg.sim);
    rec.iteration = iter;
    ch.apply(rec);
    const BinaryMask3D pred = detail::predict_step(seg, ch, gt, geometry_box(rec.geometry, gt.shape()), cfg);
    log.iterations.push_back({iter, kind, dice(gt, pred), sw.ms(), rec.summary()});
    return pred;
  };

  BinaryMask3D pred = step(0, agent.current(), whole_mask_component(gt, ErrorKind::FN));
  for (int iter = 1; iter <= cfg.followups; ++iter) {
    const InteractionKind kind = agent.next(agent_rng);
    const auto comps = compute_error_components(gt, pred, uses_fragmentation(kind), sim_rng, cfg.errors);
    if (comps.empty()) {
      const double last = log.iterations.back().dice;
      for (; iter <= cfg.followups; ++iter) log.iterations.push_back({iter, InteractionKind::none, last, 0, nullptr});
      break;
    }
    pred = step(iter, kind, select_component(comps, sim_rng));
  }
  log.final_mask = std::move(pred);
  return log;
}

// ---------------------------------------------------------------- expert scribbles

struct ScribbleSlice {
  int index = 0;
  Mask2D positive, negative;
};

/// 2D scribbles drawn on slices of one family.
struct ScribbleStack {
  SliceAxis axis = SliceAxis::axial;
  std::vector<ScribbleSlice> slices;  // sorted by index, each nonempty
};

/// Splits a scribble volume (1 positive, 2 negative, 0 none) into the
/// annotated slices of one family.
inline ScribbleStack scribble_stack_from_volume(const LabelMap3D& v, SliceAxis axis) {
  ScribbleStack st;
  st.axis = axis;
  const int n = normal_axis(axis);
  for (int k = 0; k < v.shape()[n]; ++k) {
    const SliceRef ref{axis, k};
    const Grid<std::int32_t> plane = extract_slice(v, ref);
    ScribbleSlice sl;
    sl.index = k;
    sl.positive = Mask2D(plane.shape(), 0);
    sl.negative = Mask2D(plane.shape(), 0);
    bool any_v = false;
    for (std::size_t i = 0; i < plane.size(); ++i) {
      if (plane[i] == 1) sl.positive[i] = 1;
      if (plane[i] == 2) sl.negative[i] = 1;
      any_v |= plane[i] == 1 || plane[i] == 2;
    }
    if (any_v) st.slices.push_back(std::move(sl));
  }
  return st;
}

enum class ScribbleMode { all, three };

/// Annotated slice positions used by a mode: every one, or the lowest,
/// the one at floor((lo + hi) / 2) (nearest annotated, ties lower) and the
/// highest, deduplicated.
inline std::vector<std::size_t> select_scribble_slices(const ScribbleStack& st, ScribbleMode mode) {
  if (st.slices.empty()) throw std::invalid_argument("expert scribbles: empty stack");
  std::vector<std::size_t> out;
  if (mode == ScribbleMode::all) {
    for (std::size_t i = 0; i < st.slices.size(); ++i) out.push_back(i);
    return out;
  }
  const int lo = st.slices.front().index, hi = st.slices.back().index;
  const int mid = lo + (hi - lo) / 2;
  std::size_t best = 0;
  for (std::size_t i = 0; i < st.slices.size(); ++i)
    if (std::abs(st.slices[i].index - mid) < std::abs(st.slices[best].index - mid)) best = i;
  out = {0, best, st.slices.size() - 1};
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

/// One combined initial prompt from the selected slices, one prediction.
inline SessionLog run_expert_scribbles(std::shared_ptr<const Volume3D> image, const BinaryMask3D& gt,
                                       const ScribbleStack& st, ScribbleMode mode, Segmenter& seg,
                                       const SessionConfig& cfg) {
  require_same_shape(*image, gt, "run_expert_scribbles");
  const auto chosen = select_scribble_slices(st, mode);
  std::vector<InteractionRecord> recs;
  SparseField all;
  for (Polarity pol : {Polarity::positive, Polarity::negative}) {
    InteractionRecord r;
    r.kind = InteractionKind::scribble;
    r.polarity = pol;
    for (std::size_t i : chosen) {
      const ScribbleSlice& sl = st.slices[i];
      const Mask2D& m = pol == Polarity::positive ? sl.positive : sl.negative;
      if (any(m)) r.geometry.merge_max(lift_slice(m, {st.axis, sl.index}, gt.shape()));
    }
    if (r.geometry.empty()) continue;
    r.anchor = r.geometry.index;
    all.merge_max(r.geometry);
    recs.push_back(std::move(r));
  }
  if (recs.empty()) throw std::invalid_argument("expert scribbles: selected slices carry no scribble");
  detail::Stopwatch sw(cfg.timing);
  PromptChannels ch(image);
  ch.apply_batch(recs);
  const BinaryMask3D pred = detail::predict_step(seg, ch, gt, geometry_box(all, gt.shape()), cfg);
  nlohmann::json summary{{"kind", "scribble"}, {"slices", nlohmann::json::array()}, {"mode", mode == ScribbleMode::all ? "all" : "three"}};
  for (std::size_t i : chosen) summary["slices"].push_back(st.slices[i].index);
  SessionLog log;
  log.iterations.push_back({0, InteractionKind::scribble, dice(gt, pred), sw.ms(), summary});
  log.final_mask = pred;
  return log;
}

// ---------------------------------------------------------------- one-shot simulation

struct SimulatedInteraction {
  bool no_components = false;  // gt == pred: nothing to correct
  InteractionRecord record;
  int channel = -1;
};

/// Error components of pred against gt, one component by size, one
/// interaction of `kind` on it; all randomness from `seed`.
inline SimulatedInteraction simulate_interaction(const BinaryMask3D& gt, const BinaryMask3D& pred,
                                                 InteractionKind kind, std::uint64_t seed,
                                                 const SimulationConfig& cfg = {}) {
  Rng rng(seed);
  SimulatedInteraction out;
  const auto comps = compute_error_components(gt, pred, uses_fragmentation(kind), rng);
  if (comps.empty()) {
    out.no_components = true;
    return out;
  }
  out.record = simulate_interaction(kind, select_component(comps, rng), rng, cfg);
  out.channel = channel_for(kind, out.record.polarity);
  return out;
}

// ---------------------------------------------------------------- reports

struct CurveSummary {
  std::string id;
  std::vector<double> curve;
  double auc = 0;
};

struct MetricsReport {
  std::vector<SessionLog> cases;  // sorted by case id
  std::vector<CurveSummary> datasets;
  CurveSummary overall;
};

namespace detail {

inline CurveSummary mean_curve(const std::string& id, const std::vector<const SessionLog*>& logs) {
  CurveSummary s;
  s.id = id;
  std::size_t n = 0;
  for (const SessionLog* l : logs) n = std::max(n, l->iterations.size());
  s.curve.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double sum = 0;
    for (const SessionLog* l : logs) sum += l->iterations.empty() ? 0 : l->iterations[std::min(k, l->iterations.size() - 1)].dice;
    s.curve[k] = sum / static_cast<double>(logs.size());
  }
  s.auc = curve_auc(s.curve);
  return s;
}

inline std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace detail

/// Independent of input order.
inline MetricsReport aggregate(std::vector<SessionLog> logs) {
  if (logs.empty()) throw std::invalid_argument("aggregate: no logs");
  std::stable_sort(logs.begin(), logs.end(), [](const SessionLog& a, const SessionLog& b) {
    return std::tie(a.dataset, a.case_id) < std::tie(b.dataset, b.case_id);
  });
  MetricsReport r;
  r.cases = std::move(logs);
  std::map<std::string, std::vector<const SessionLog*>> by_ds;
  std::vector<const SessionLog*> all;
  for (const SessionLog& l : r.cases) {
    by_ds[l.dataset].push_back(&l);
    all.push_back(&l);
  }
  for (const auto& [id, ls] : by_ds) r.datasets.push_back(detail::mean_curve(id, ls));
  r.overall = detail::mean_curve("all", all);
  return r;
}

/// Columns case,iter,kind,dice,ms.
inline std::string report_csv(const MetricsReport& r) {
  std::ostringstream o;
  o << "case,iter,kind,dice,ms\n";
  for (const SessionLog& l : r.cases)
    for (const IterationLog& it : l.iterations)
      o << l.case_id << ',' << it.iter << ',' << to_string(it.kind) << ',' << detail::fmt("%.6f", it.dice) << ','
        << detail::fmt("%.3f", it.ms) << '\n';
  return o.str();
}

inline nlohmann::json report_json(const MetricsReport& r) {
  auto curve_json = [](const CurveSummary& s) {
    return nlohmann::json{{"id", s.id}, {"curve", s.curve}, {"auc", s.auc}};
  };
  nlohmann::json j{{"cases", nlohmann::json::array()}, {"datasets", nlohmann::json::array()}};
  for (const SessionLog& l : r.cases) {
    nlohmann::json c{{"case", l.case_id}, {"dataset", l.dataset}, {"iterations", nlohmann::json::array()}};
    const auto curve = l.curve();
    c["auc"] = curve_auc(curve);
    for (const IterationLog& it : l.iterations)
      c["iterations"].push_back(
          {{"iter", it.iter}, {"kind", to_string(it.kind)}, {"dice", it.dice}, {"ms", it.ms}, {"record", it.record}});
    j["cases"].push_back(std::move(c));
  }
  for (const auto& d : r.datasets) j["datasets"].push_back(curve_json(d));
  j["overall"] = curve_json(r.overall);
  return j;
}

// ---------------------------------------------------------------- worker pool

/// Runs job(i) for i in [0, n) on up to `threads` workers; results keep
/// their index, so output order never depends on scheduling. The first
/// exception is rethrown after all workers stop.
template <typename R>
std::vector<R> parallel_map(std::size_t n, unsigned threads, const std::function<R(std::size_t)>& job) {
  std::vector<std::optional<R>> out(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next++;
      if (i >= n) return;
      try {
        out[i] = job(i);
      } catch (...) {
        std::lock_guard lock(err_mu);
        if (!err) err = std::current_exception();
        next = n;
      }
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
  std::vector<R> res;
  res.reserve(n);
  for (auto& o : out) res.push_back(std::move(*o));
  return res;
}

/// Per-case stream, independent of scheduling and of the other cases.
inline Rng case_rng(std::uint64_t master_seed, const std::string& case_id) { return Rng(master_seed, fnv1a64(case_id)); }

// ---------------------------------------------------------------- synthetic cases

struct SyntheticCase {
  Volume3D image;
  LabelMap3D labels;
};

/// 1..3 random ellipsoids of class 1 on a noisy background; intensity 1
/// inside, 0 outside, plus Gaussian noise of `noise_sd`.
inline SyntheticCase make_synthetic_case(Rng& rng, const Shape3& shape, double noise_sd = 0.1) {
  SyntheticCase c{Volume3D(shape, 0.0f), LabelMap3D(shape, 0)};
  const int blobs = static_cast<int>(rng.integer(1, 3));
  const int smallest = std::min({shape.nx, shape.ny, shape.is_2d() ? shape.nx : shape.nz});
  for (int b = 0; b < blobs; ++b) {
    Vec3 r{}, ctr{};
    for (int a = 0; a < 3; ++a) {
      r[a] = rng.uniform(0.12, 0.25) * smallest;
      ctr[a] = rng.uniform(r[a] + 1, shape[a] - r[a] - 1);
    }
    if (shape.is_2d()) {
      r[2] = 1;
      ctr[2] = 0;
    }
    for (int z = 0; z < shape.nz; ++z)
      for (int y = 0; y < shape.ny; ++y)
        for (int x = 0; x < shape.nx; ++x) {
          const double dx = (x - ctr[0]) / r[0], dy = (y - ctr[1]) / r[1], dz = (z - ctr[2]) / r[2];
          if (dx * dx + dy * dy + dz * dz <= 1) c.labels(x, y, z) = 1;
        }
  }
  for (std::size_t i = 0; i < c.image.size(); ++i)
    c.image[i] = static_cast<float>((c.labels[i] ? 1.0 : 0.0) + noise_sd * rng.normal());
  return c;
}

}  // namespace interseg
