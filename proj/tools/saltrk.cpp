#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "saltrk/dataset.hpp"
#include "saltrk/image_io.hpp"
#include "saltrk/kernels.hpp"
#include "saltrk/metrics.hpp"
#include "saltrk/segmentation.hpp"
#include "saltrk/tracker.hpp"

namespace fs = std::filesystem;
using namespace saltrk;

namespace {

struct TrackArgs {
  std::string sequence, net, init, config, out, dump_dir;
  std::optional<std::uint64_t> seed;
};

struct EvalArgs {
  std::string results, gt, attr;
};

struct SynthArgs {
  std::string out, clutter = "medium", start = "10,10", size = "64,64", tags;
  std::vector<std::string> vel;
  int frames = 100, target = 12;
  double random_speed = 0;
  std::uint64_t seed = 1;
};

struct DiagArgs {
  TrackArgs track;
  int frame = 1;
  std::string out;
  // segment only
  int iterations = 5, margin = 50;
  double fg = 0.7;
};

std::pair<double, double> parse_pair(const std::string& s, const std::string& what) {
  std::string t = s;
  std::replace(t.begin(), t.end(), ',', ' ');
  std::istringstream in(t);
  double a, b;
  if (!(in >> a >> b)) throw InputError("cannot parse " + what + " '" + s + "'");
  return {a, b};
}

FeatureNet load_net(const std::string& arg) {
  const auto comma = arg.find(',');
  if (comma == std::string::npos) throw InputError("--net expects SPEC,WEIGHTS");
  LoadedNetwork ln = load_weights(arg.substr(0, comma), arg.substr(comma + 1));
  return FeatureNet(ln.spec, ln.weights);
}

TrackerConfig resolve_config(const TrackArgs& a) {
  TrackerConfig cfg = a.config.empty() ? TrackerConfig{} : load_config(a.config);
  if (a.seed) cfg.rng_seed = *a.seed;
  cfg.validate();
  return cfg;
}

std::string frame_name(const char* prefix, int index, const char* ext) {
  std::ostringstream s;
  s << prefix << std::setw(4) << std::setfill('0') << index << ext;
  return s.str();
}

// Tracks frames 1..last (all when last == 0) and hands every frame's output to `sink`.
template <typename Sink>
TrackResult track_sequence(const TrackArgs& a, std::size_t last, Sink&& sink) {
  const SequenceDataset ds = load_sequence(a.sequence);
  if (ds.frames.empty()) throw InputError("sequence has no frames");
  const Box init = parse_box(a.init);
  TrackerSession session(load_net(a.net), resolve_config(a));
  const std::size_t count = last == 0 ? ds.frames.size() : std::min(last, ds.frames.size());
  Image current;
  return run_sequence(
      session, count,
      [&](std::size_t i) -> const Image& {
        current = read_image(ds.frames[i]);
        return current;
      },
      init, [&](const FrameOutput& out) { sink(out, current); });
}

int run_track(const TrackArgs& a) {
  if (!a.dump_dir.empty()) fs::create_directories(a.dump_dir);
  TrackResult result = track_sequence(a, 0, [&](const FrameOutput& out, const Image&) {
    if (a.dump_dir.empty()) return;
    const fs::path d = a.dump_dir;
    write_grid_pgm(out.saliency.values, d / frame_name("saliency_", out.record.frame_index, ".pgm"));
    write_grid_pgm(out.posterior.mass, d / frame_name("posterior_", out.record.frame_index, ".pgm"));
  });
  std::vector<Box> boxes;
  for (const auto& r : result) boxes.push_back(r.state.box());
  write_results_csv(a.out, boxes);
  std::cout << "tracked " << boxes.size() << " frames -> " << a.out << "\n";
  return 0;
}

int run_eval(const EvalArgs& a) {
  const std::vector<Box> pred = read_results_csv(a.results);
  if (pred.empty()) throw InputError("results file " + a.results + " is empty");
  const SequenceDataset ds = load_sequence(a.gt);
  if (pred.size() != ds.ground_truth.size())
    throw InputError("results=" + std::to_string(pred.size()) + " gt=" + std::to_string(ds.ground_truth.size()));

  const EvalCurve success = success_curve(pred, ds.ground_truth);
  const EvalCurve precision = precision_curve(pred, ds.ground_truth);
  write_curve_csv(a.results + ".success.csv", success);
  write_curve_csv(a.results + ".precision.csv", precision);

  std::cout << std::fixed << std::setprecision(6);
  std::cout << "sequence     " << ds.name << "\n";
  std::cout << "frames       " << pred.size() << "\n";
  std::cout << "auc          " << success.summary << "\n";
  std::cout << "precision@20 " << precision.summary << "\n";

  std::vector<std::string> tags = a.attr.empty() ? ds.tags : parse_tags(a.attr);
  if (!tags.empty()) {
    const SequenceScore score{ds.name, success.summary, tags};
    const AttributeTable table = attribute_table(std::span<const SequenceScore>(&score, 1));
    std::cout << "attribute  auc       sequences\n";
    for (const auto& row : table.rows)
      std::cout << std::left << std::setw(10) << row.tag << " " << row.mean << "  " << row.count << "\n";
    std::cout << "weighted   " << table.weighted_average << "\n";
  }
  return 0;
}

int run_synth(const SynthArgs& a) {
  SynthConfig cfg;
  const auto [w, h] = parse_pair(a.size, "--size");
  cfg.width = static_cast<int>(w);
  cfg.height = static_cast<int>(h);
  const auto [sx, sy] = parse_pair(a.start, "--start");
  cfg.start_x = sx;
  cfg.start_y = sy;
  cfg.length = a.frames;
  cfg.target_size = a.target;
  cfg.clutter = parse_clutter(a.clutter);
  cfg.seed = a.seed;
  if (a.random_speed > 0) {
    if (!a.vel.empty()) throw InputError("--vel and --random-path are exclusive");
    cfg.path = random_bounded_path(cfg.width, cfg.height, cfg.target_size, sx, sy, cfg.length, a.random_speed, a.seed);
  }
  // Each --vel is "vx,vy" or "vx,vy:frames"; the last leg runs to the end.
  for (const auto& v : a.vel) {
    MotionSegment m;
    const auto colon = v.find(':');
    std::tie(m.vx, m.vy) = parse_pair(v.substr(0, colon), "--vel");
    m.frames = colon == std::string::npos ? cfg.length : std::atoi(v.c_str() + colon + 1);
    if (m.frames <= 0) throw InputError("--vel leg length must be positive: '" + v + "'");
    cfg.path.push_back(m);
  }
  const SyntheticSequence seq = synth_sequence(cfg);
  write_sequence(seq, a.out, parse_tags(a.tags));
  std::cout << "wrote " << seq.frames.size() << " frames to " << a.out << "\n";
  return 0;
}

int run_dump_saliency(const DiagArgs& a) {
  if (a.frame < 1) throw InputError("--frame is 1-based");
  bool written = false;
  track_sequence(a.track, static_cast<std::size_t>(a.frame), [&](const FrameOutput& out, const Image&) {
    if (out.record.frame_index != a.frame) return;
    write_grid_pgm(out.saliency.values, a.out);
    std::cout << "frame " << a.frame << " saliency max " << out.saliency.values.max() << " -> " << a.out << "\n";
    written = true;
  });
  if (!written) throw InputError("sequence is shorter than --frame " + std::to_string(a.frame));
  return 0;
}

int run_segment(const DiagArgs& a) {
  if (a.frame < 1) throw InputError("--frame is 1-based");
  std::optional<FrameOutput> target;
  Image frame;
  track_sequence(a.track, static_cast<std::size_t>(a.frame), [&](const FrameOutput& out, const Image& img) {
    if (out.record.frame_index != a.frame) return;
    target = out;
    frame = img;
  });
  if (!target) throw InputError("sequence is shorter than --frame " + std::to_string(a.frame));

  const Trimap full = seeds_from_saliency(target->saliency, target->record.state, a.fg, a.margin);
  if (!full.solvable())
    throw StateError("unsolvable trimap: " + std::to_string(full.count(TrimapLabel::Foreground)) + " foreground and " +
                     std::to_string(full.count(TrimapLabel::Background)) + " background seeds");

  // Region of interest: the box plus the background ring.
  const Box b = target->record.state.box();
  const int x0 = std::max(0, static_cast<int>(b.x) - a.margin), y0 = std::max(0, static_cast<int>(b.y) - a.margin);
  const int x1 = std::min(frame.width(), static_cast<int>(b.x + b.w) + a.margin);
  const int y1 = std::min(frame.height(), static_cast<int>(b.y + b.h) + a.margin);
  Image roi(x1 - x0, y1 - y0, frame.channels());
  Trimap tri(x1 - x0, y1 - y0);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      for (int c = 0; c < frame.channels(); ++c) roi.at(x - x0, y - y0, c) = frame.at(x, y, c);
      tri.at(x - x0, y - y0) = full.at(x, y);
    }
  const GrabCutResult gc = grabcut(roi, tri, a.iterations);

  std::vector<std::uint8_t> mask(static_cast<std::size_t>(frame.width()) * frame.height(), 0);
  std::size_t fg = 0;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      const auto v = gc.mask[static_cast<std::size_t>(y - y0) * roi.width() + (x - x0)];
      mask[static_cast<std::size_t>(y) * frame.width() + x] = v;
      fg += v;
    }
  write_mask_pbm(mask, frame.width(), frame.height(), a.out);
  std::cout << "foreground pixels " << fg << ", final energy " << gc.energies.back() << " -> " << a.out << "\n";
  return 0;
}

void add_track_flags(CLI::App* cmd, TrackArgs& t, bool with_out) {
  cmd->add_option("--sequence", t.sequence, "sequence directory (img/ + groundtruth_rect.txt)")->required();
  cmd->add_option("--net", t.net, "SPEC,WEIGHTS")->required();
  cmd->add_option("--init", t.init, "initial box x,y,w,h")->required();
  cmd->add_option("--config", t.config, "key=value tracker config");
  cmd->add_option("--seed", t.seed, "sampling seed (overrides the config)");
  if (with_out) {
    cmd->add_option("--out", t.out, "result CSV")->required();
    cmd->add_option("--dump-dir", t.dump_dir, "write per-frame saliency/posterior images here");
  }
}

void apply_thread_env() {
  const char* env = std::getenv("SALTRK_THREADS");
  if (!env || !*env) return;
  char* end = nullptr;
  const long n = std::strtol(env, &end, 10);
  if (*end != '\0' || n < 0) throw InputError(std::string("SALTRK_THREADS must be a non-negative integer, got '") + env + "'");
  kernels::set_thread_limit(static_cast<int>(n));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"saliency tracking-by-detection"};
  app.require_subcommand(1);

  TrackArgs track;
  auto* track_cmd = app.add_subcommand("track", "track a sequence and write per-frame boxes");
  add_track_flags(track_cmd, track, true);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "success/precision scores of a result CSV");
  eval_cmd->add_option("--results", eval.results, "result CSV")->required();
  eval_cmd->add_option("--gt", eval.gt, "sequence directory with ground truth")->required();
  eval_cmd->add_option("--attr", eval.attr, "comma separated attribute tags (default: attributes.txt)");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic sequence");
  synth_cmd->add_option("--out", synth.out, "output sequence directory")->required();
  synth_cmd->add_option("--frames", synth.frames, "sequence length")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--vel", synth.vel, "velocity vx,vy[:frames]; repeat for piecewise motion");
  synth_cmd->add_option("--random-path", synth.random_speed, "random piecewise-linear path with this max speed");
  synth_cmd->add_option("--start", synth.start, "top-left of the target in frame 1");
  synth_cmd->add_option("--size", synth.size, "frame width,height");
  synth_cmd->add_option("--target", synth.target, "target side length");
  synth_cmd->add_option("--clutter", synth.clutter, "none|low|medium|high");
  synth_cmd->add_option("--tags", synth.tags, "attribute tags written to attributes.txt");
  synth_cmd->add_option("--seed", synth.seed, "generator seed");

  DiagArgs dump;
  auto* dump_cmd = app.add_subcommand("dump-saliency", "write the saliency map of one frame as PGM");
  add_track_flags(dump_cmd, dump.track, false);
  dump_cmd->add_option("--frame", dump.frame, "1-based frame index")->required();
  dump_cmd->add_option("--out", dump.out, "output PGM")->required();

  DiagArgs seg;
  auto* seg_cmd = app.add_subcommand("segment", "GrabCut the tracked target of one frame");
  add_track_flags(seg_cmd, seg.track, false);
  seg_cmd->add_option("--frame", seg.frame, "1-based frame index")->required();
  seg_cmd->add_option("--out", seg.out, "output PBM mask")->required();
  seg_cmd->add_option("--iterations", seg.iterations, "GrabCut iterations")->check(CLI::NonNegativeNumber);
  seg_cmd->add_option("--margin", seg.margin, "background ring width")->check(CLI::NonNegativeNumber);
  seg_cmd->add_option("--fg", seg.fg, "foreground seed fraction of max saliency");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    apply_thread_env();
    if (*track_cmd) return run_track(track);
    if (*eval_cmd) return run_eval(eval);
    if (*synth_cmd) return run_synth(synth);
    if (*dump_cmd) return run_dump_saliency(dump);
    if (*seg_cmd) return run_segment(seg);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const StateError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 2;
}
