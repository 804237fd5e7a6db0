#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "saltrk/dataset.hpp"
#include "saltrk/image_io.hpp"

namespace saltrk {

namespace fs = std::filesystem;

namespace {

struct Rgb {
  double r, g, b;
};

// The two target colours. Clutter never saturates this far.
constexpr Rgb kWarm{0.92, 0.12, 0.10};
constexpr Rgb kCool{0.10, 0.22, 0.92};

struct ClutterProfile {
  int rectangles;
  int decoys;  // solid single-colour patches smaller than the target
  double noise;
};

ClutterProfile profile(ClutterLevel level) {
  switch (level) {
    case ClutterLevel::None: return {0, 0, 0.0};
    case ClutterLevel::Low: return {6, 0, 0.01};
    case ClutterLevel::Medium: return {14, 1, 0.02};
    case ClutterLevel::High: return {28, 3, 0.04};
  }
  return {0, 0, 0.0};
}

void fill_rect(Image& img, int x0, int y0, int w, int h, const Rgb& c) {
  for (int y = std::max(0, y0); y < std::min(img.height(), y0 + h); ++y)
    for (int x = std::max(0, x0); x < std::min(img.width(), x0 + w); ++x) {
      img.at(x, y, 0) = c.r;
      img.at(x, y, 1) = c.g;
      img.at(x, y, 2) = c.b;
    }
}

Image render_background(const SynthConfig& cfg, std::mt19937_64& rng) {
  Image bg(cfg.width, cfg.height, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double gx = 0.25 * (u(rng) - 0.5), gy = 0.25 * (u(rng) - 0.5), base = 0.4 + 0.2 * u(rng);
  for (int y = 0; y < cfg.height; ++y)
    for (int x = 0; x < cfg.width; ++x) {
      const double v = base + gx * (x / double(cfg.width) - 0.5) + gy * (y / double(cfg.height) - 0.5);
      for (int c = 0; c < 3; ++c) bg.at(x, y, c) = v;
    }
  const ClutterProfile p = profile(cfg.clutter);
  const int max_side = std::max(4, std::min(cfg.width, cfg.height) / 4);
  std::uniform_int_distribution<int> side(3, max_side);
  for (int i = 0; i < p.rectangles; ++i) {
    const int w = side(rng), h = side(rng);
    const int x = static_cast<int>(u(rng) * (cfg.width - 1)) - w / 2;
    const int y = static_cast<int>(u(rng) * (cfg.height - 1)) - h / 2;
    const double g = 0.15 + 0.7 * u(rng);
    fill_rect(bg, x, y, w, h, {g + 0.12 * (u(rng) - 0.5), g + 0.12 * (u(rng) - 0.5), g + 0.12 * (u(rng) - 0.5)});
  }
  const int decoy = std::max(2, cfg.target_size / 3);
  for (int i = 0; i < p.decoys; ++i) {
    const int x = static_cast<int>(u(rng) * (cfg.width - decoy));
    const int y = static_cast<int>(u(rng) * (cfg.height - decoy));
    fill_rect(bg, x, y, decoy, decoy, i % 2 == 0 ? kWarm : kCool);
  }
  return bg;
}

// 3x3 cells of the two target colours; both colours always present.
std::vector<int> target_pattern(std::mt19937_64& rng) {
  std::vector<int> cells(9);
  std::bernoulli_distribution coin(0.5);
  do {
    for (auto& c : cells) c = coin(rng) ? 1 : 0;
  } while (std::count(cells.begin(), cells.end(), 1) < 3 || std::count(cells.begin(), cells.end(), 0) < 3);
  return cells;
}

}  // namespace

std::vector<Box> synth_ground_truth(const SynthConfig& cfg) {
  if (cfg.length < 1) throw InputError("synthetic sequence needs at least one frame");
  if (cfg.target_size < 3) throw InputError("synthetic target must be at least 3 px");
  std::vector<Box> gt;
  gt.reserve(static_cast<std::size_t>(cfg.length));
  double x = cfg.start_x, y = cfg.start_y;
  std::size_t seg = 0;
  int used = 0;
  const double s = cfg.target_size;
  for (int t = 0; t < cfg.length; ++t) {
    const Box b{std::round(x), std::round(y), s, s};
    if (b.x < 0 || b.y < 0 || b.x + s > cfg.width || b.y + s > cfg.height) {
      std::ostringstream msg;
      msg << "target leaves the frame at frame " << t + 1 << " (" << b.x << "," << b.y << ")";
      throw InputError(msg.str());
    }
    gt.push_back(b);
    if (seg < cfg.path.size()) {
      x += cfg.path[seg].vx;
      y += cfg.path[seg].vy;
      if (++used >= cfg.path[seg].frames && seg + 1 < cfg.path.size()) {
        ++seg;
        used = 0;
      }
    }
  }
  return gt;
}

SyntheticSequence synth_sequence(const SynthConfig& cfg) {
  if (cfg.width < 1 || cfg.height < 1) throw InputError("synthetic frame size must be positive");
  SyntheticSequence seq;
  seq.ground_truth = synth_ground_truth(cfg);

  std::mt19937_64 rng(cfg.seed);
  const Image bg = render_background(cfg, rng);
  const std::vector<int> pattern = target_pattern(rng);
  const double noise = profile(cfg.clutter).noise;
  std::normal_distribution<double> n01(0.0, 1.0);

  const int s = cfg.target_size;
  seq.frames.reserve(seq.ground_truth.size());
  for (const Box& b : seq.ground_truth) {
    Image f = bg;
    const int x0 = static_cast<int>(b.x), y0 = static_cast<int>(b.y);
    for (int y = 0; y < s; ++y)
      for (int x = 0; x < s; ++x) {
        const int cell = std::min(2, y * 3 / s) * 3 + std::min(2, x * 3 / s);
        const Rgb& c = pattern[cell] ? kWarm : kCool;
        f.at(x0 + x, y0 + y, 0) = c.r;
        f.at(x0 + x, y0 + y, 1) = c.g;
        f.at(x0 + x, y0 + y, 2) = c.b;
      }
    if (noise > 0)
      for (double& v : f.values()) v = std::clamp(v + noise * n01(rng), 0.0, 1.0);
    seq.frames.push_back(std::move(f));
  }
  return seq;
}

void write_sequence(const SyntheticSequence& seq, const fs::path& dir, std::span<const std::string> tags) {
  fs::create_directories(dir / kFrameDir);
  for (std::size_t i = 0; i < seq.frames.size(); ++i) {
    std::ostringstream name;
    name << std::setw(4) << std::setfill('0') << i + 1 << ".ppm";
    write_image(seq.frames[i], dir / kFrameDir / name.str());
  }
  std::ofstream gt(dir / kGroundTruthFile);
  if (!gt) throw InputError("cannot write " + (dir / kGroundTruthFile).string());
  for (const Box& b : seq.ground_truth) gt << b.x << "," << b.y << "," << b.w << "," << b.h << "\n";
  if (!tags.empty()) {
    std::ofstream at(dir / kAttributeFile);
    for (std::size_t i = 0; i < tags.size(); ++i) at << (i ? "," : "") << tags[i];
    at << "\n";
  }
}

std::vector<MotionSegment> random_bounded_path(int width, int height, int size, double start_x, double start_y,
                                               int length, double max_speed, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> leg(8, 20);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI), speed(1.0, max_speed);
  std::vector<MotionSegment> path;
  double x = start_x, y = start_y;
  const double xmax = width - size, ymax = height - size;
  for (int t = 0; t < length;) {
    const int frames = std::min(leg(rng), length - t);
    MotionSegment m{frames, 0, 0};
    for (int attempt = 0; attempt < 64; ++attempt) {
      const double a = angle(rng), v = speed(rng);
      // Integer velocities keep every ground-truth box on the pixel grid.
      const double vx = std::round(v * std::cos(a)), vy = std::round(v * std::sin(a));
      if (std::hypot(vx, vy) > max_speed + 1e-9) continue;
      const double ex = x + vx * frames, ey = y + vy * frames;
      if (ex >= 0 && ey >= 0 && ex <= xmax && ey <= ymax) {
        m.vx = vx;
        m.vy = vy;
        break;
      }
    }
    x += m.vx * frames;
    y += m.vy * frames;
    path.push_back(m);
    t += frames;
  }
  return path;
}

}  // namespace saltrk
