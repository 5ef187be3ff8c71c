// bench: batch interactive-refinement sessions, expert-scribble evaluation
// and synthetic case generation. Errors are reported as one JSON object on
// stderr with a nonzero exit code.

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "interseg/interseg.hpp"

namespace fs = std::filesystem;
using namespace interseg;

namespace {

struct Options {
  std::string manifest;
  std::string segmenter = "gt";
  std::string agent = "random";
  std::string kinds = "point,scribble,lasso,bbox2d";
  std::string initial_kind;
  int followups = 5;
  std::uint64_t seed = 0;
  std::string autozoom = "on";
  std::string out = "bench_out";
  std::string format = "csv,json";
  int patch = 192;
  double zoom_step = 1.5;
  double zoom_cap = 4.0;
  long border_threshold = 1000;
  double stride_fraction = 0.5;
  double tau = 500.0;
  double tolerance = 0.5;
  bool timing = false;
  bool save_masks = false;
  unsigned threads = 1;
  int target_class = 0;  // 0: every foreground class
  std::string mode = "all";
  std::string stack_axis = "axial";
};

struct SynthOptions {
  std::string out = "synth";
  int count = 10;
  std::vector<int> shape{48, 48, 40};
  std::uint64_t seed = 0;
  bool scribbles = false;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

SliceAxis slice_axis_from_string(const std::string& s) {
  for (SliceAxis a : {SliceAxis::axial, SliceAxis::coronal, SliceAxis::sagittal})
    if (s == to_string(a)) return a;
  throw std::invalid_argument("unknown slice axis: " + s);
}

SessionConfig session_config(const Options& o) {
  SessionConfig c;
  c.agent = agent_kind_from_string(o.agent);
  c.kinds.clear();
  for (const auto& k : split_list(o.kinds)) c.kinds.push_back(interaction_kind_from_string(k));
  if (c.kinds.empty()) throw std::invalid_argument("--kinds must name at least one kind");
  if (!o.initial_kind.empty()) c.initial_kind = interaction_kind_from_string(o.initial_kind);
  if (o.followups < 0) throw std::invalid_argument("--followups must be >= 0");
  c.followups = o.followups;
  if (o.autozoom != "on" && o.autozoom != "off") throw std::invalid_argument("--autozoom must be on or off");
  c.autozoom = o.autozoom == "on";
  c.zoom.patch = o.patch;
  c.zoom.zoom_step = o.zoom_step;
  c.zoom.zoom_cap = o.zoom_cap;
  c.zoom.border_threshold = o.border_threshold;
  c.zoom.stride_fraction = o.stride_fraction;
  c.timing = o.timing;
  return c;
}

BinaryMask3D target_from(const InstanceMap& labels, int target_class) {
  BinaryMask3D gt(labels.instances.shape(), 0);
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const int id = labels.instances[i];
    if (id && (target_class == 0 || labels.instance_class[static_cast<std::size_t>(id - 1)] == target_class)) gt[i] = 1;
  }
  return gt;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw IoError("cannot write " + p.string());
  f << s;
  if (!f) throw IoError("write failed: " + p.string());
}

void emit(const std::vector<SessionLog>& logs, const Options& o) {
  const MetricsReport rep = aggregate(logs);
  fs::create_directories(o.out);
  const auto formats = split_list(o.format);
  if (formats.empty()) throw std::invalid_argument("--format must name csv and/or json");
  for (const auto& f : formats) {
    if (f == "csv")
      write_text(fs::path(o.out) / "report.csv", report_csv(rep));
    else if (f == "json")
      write_text(fs::path(o.out) / "report.json", report_json(rep).dump(2) + "\n");
    else
      throw std::invalid_argument("unknown format: " + f);
  }
  if (o.save_masks) {
    fs::create_directories(fs::path(o.out) / "masks");
    for (const auto& l : logs)
      if (l.final_mask) write_nifti(*l.final_mask, (fs::path(o.out) / "masks" / (l.case_id + ".nii.gz")).string(), NiftiType::uint8);
  }
  std::printf("%zu cases, overall AUC %.6f\n", logs.size(), rep.overall.auc);
}

std::vector<SessionLog> run_cases(const Options& o, bool scribbles) {
  const Manifest m = load_manifest(o.manifest);
  if (m.cases.empty()) throw std::invalid_argument("manifest has no cases");
  const SessionConfig cfg = session_config(o);
  const ScribbleMode mode = o.mode == "three" ? ScribbleMode::three : ScribbleMode::all;
  if (o.mode != "all" && o.mode != "three") throw std::invalid_argument("--mode must be all or three");
  const SliceAxis axis = slice_axis_from_string(o.stack_axis);
  const std::function<SessionLog(std::size_t)> job = [&](std::size_t i) {
    const CaseManifest& cm = m.cases[i];
    LoadedCase lc = load_case(cm);
    const BinaryMask3D gt = target_from(lc.labels, o.target_class);
    if (count(gt) == 0) throw std::invalid_argument("case '" + cm.id + "': empty target");
    auto image = std::make_shared<const Volume3D>(std::move(lc.image));
    Rng rng = case_rng(o.seed, cm.id);
    auto seg = make_segmenter(o.segmenter, rng.split("segmenter").next_u64(), o.tau, o.tolerance);
    SessionLog log;
    if (scribbles) {
      if (!cm.scribbles) throw std::invalid_argument("case '" + cm.id + "': no scribbles file");
      const ScribbleStack st = scribble_stack_from_volume(read_labels(*cm.scribbles), axis);
      log = run_expert_scribbles(image, gt, st, mode, *seg, cfg);
    } else {
      log = run_session(image, gt, *seg, cfg, rng);
    }
    log.case_id = cm.id;
    log.dataset = cm.dataset;
    return log;
  };
  return parallel_map<SessionLog>(m.cases.size(), std::max(1u, o.threads), job);
}

// Sparse positive strokes on every fourth axial slice of the target and a
// negative stroke along the x = 1 column.
LabelMap3D synthetic_scribbles(const LabelMap3D& labels) {
  LabelMap3D s(labels.shape(), 0);
  BinaryMask3D fg(labels.shape(), 0);
  for (std::size_t i = 0; i < fg.size(); ++i) fg[i] = labels[i] != 0;
  const Box3 bb = bounding_box(fg);
  for (int z = bb.lo[2]; z < bb.hi[2]; z += 4)
    for (int y = 0; y < s.shape().ny; ++y)
      for (int x = 0; x < s.shape().nx; ++x) {
        if (fg(x, y, z) && (x + y) % 4 == 0) s(x, y, z) = 1;
        if (!fg(x, y, z) && x == 1) s(x, y, z) = 2;
      }
  return s;
}

void synth(const SynthOptions& o) {
  if (o.count < 1) throw std::invalid_argument("--count must be >= 1");
  if (o.shape.size() != 3) throw std::invalid_argument("--shape needs three values");
  const Shape3 shape{o.shape[0], o.shape[1], o.shape[2]};
  fs::create_directories(o.out);
  nlohmann::json cases = nlohmann::json::array();
  for (int i = 0; i < o.count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "synth_%03d", i);
    Rng rng = case_rng(o.seed, id);
    const SyntheticCase c = make_synthetic_case(rng, shape);
    const std::string img = std::string(id) + "_img.nii.gz", lab = std::string(id) + "_lab.nii.gz";
    write_nifti(c.image, (fs::path(o.out) / img).string(), NiftiType::float32);
    write_nifti(c.labels, (fs::path(o.out) / lab).string(), NiftiType::uint8);
    nlohmann::json e{{"id", id}, {"dataset", "synthetic"}, {"image", img}, {"label", lab}};
    if (o.scribbles) {
      const std::string scr = std::string(id) + "_scr.nii.gz";
      write_nifti(synthetic_scribbles(c.labels), (fs::path(o.out) / scr).string(), NiftiType::uint8);
      e["scribbles"] = scr;
    }
    cases.push_back(std::move(e));
  }
  write_text(fs::path(o.out) / "manifest.json", nlohmann::json{{"cases", cases}}.dump(2) + "\n");
  std::printf("wrote %d cases to %s\n", o.count, o.out.c_str());
}

void add_session_flags(CLI::App* c, Options& o) {
  c->add_option("--manifest", o.manifest, "cases.json")->required();
  c->add_option("--segmenter", o.segmenter, "gt | noisy | regiongrow | subprocess:CMD");
  c->add_option("--followups", o.followups);
  c->add_option("--seed", o.seed, "master seed");
  c->add_option("--autozoom", o.autozoom, "on | off");
  c->add_option("--out", o.out, "output directory");
  c->add_option("--format", o.format, "csv,json");
  c->add_option("--patch", o.patch);
  c->add_option("--zoom-step", o.zoom_step);
  c->add_option("--zoom-cap", o.zoom_cap);
  c->add_option("--border-threshold", o.border_threshold);
  c->add_option("--stride-fraction", o.stride_fraction);
  c->add_option("--tau", o.tau, "noisy oracle prompt-mass scale");
  c->add_option("--tolerance", o.tolerance, "regiongrow intensity tolerance");
  c->add_flag("--timing", o.timing, "record wall time per iteration");
  c->add_flag("--save-masks", o.save_masks, "write final masks as NIfTI");
  c->add_option("--threads", o.threads);
  c->add_option("--target-class", o.target_class, "0 selects every foreground class");
}

int fail(const std::string& kind, const std::string& msg, int code) {
  std::cerr << nlohmann::json{{"error", kind}, {"message", msg}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"interactive segmentation benchmark"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;
  SynthOptions so;
  auto* run = app.add_subcommand("run", "simulated interactive sessions");
  add_session_flags(run, o);
  run->add_option("--agent", o.agent, "random | sunkcost | single");
  run->add_option("--kinds", o.kinds, "comma-separated interaction kinds");
  run->add_option("--initial-kind", o.initial_kind, "pin the first interaction kind");
  auto* scr = app.add_subcommand("scribbles", "expert scribble evaluation");
  add_session_flags(scr, o);
  scr->add_option("--mode", o.mode, "all | three");
  scr->add_option("--stack-axis", o.stack_axis, "axial | coronal | sagittal");
  auto* syn = app.add_subcommand("synth", "write synthetic cases and a manifest");
  syn->add_option("--out", so.out);
  syn->add_option("--count", so.count);
  syn->add_option("--shape", so.shape)->expected(3);
  syn->add_option("--seed", so.seed);
  syn->add_flag("--scribbles", so.scribbles, "also write scribble volumes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail("usage", e.what(), 2);
  }

  try {
    if (syn->parsed())
      synth(so);
    else
      emit(run_cases(o, scr->parsed()), o);
  } catch (const NiftiError& e) {
    return fail("nifti", e.what(), 3);
  } catch (const IoError& e) {
    return fail("io", e.what(), 3);
  } catch (const std::invalid_argument& e) {
    return fail("invalid_argument", e.what(), 4);
  } catch (const std::exception& e) {
    return fail("runtime", e.what(), 5);
  }
  return 0;
}
