#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "saltrk/common.hpp"
#include "saltrk/metrics.hpp"

namespace saltrk {

// Frames live in DIR/img (sorted lexicographically), boxes in DIR/groundtruth_rect.txt,
// optional tags in DIR/attributes.txt.
struct SequenceDataset {
  std::string name;
  std::vector<std::filesystem::path> frames;
  std::vector<Box> ground_truth;
  std::vector<std::string> tags;
};

inline constexpr const char* kFrameDir = "img";
inline constexpr const char* kGroundTruthFile = "groundtruth_rect.txt";
inline constexpr const char* kAttributeFile = "attributes.txt";

// "x,y,w,h" with comma, tab or space separators.
Box parse_box(const std::string& line);
std::vector<Box> parse_ground_truth(const std::string& text);
std::vector<std::string> parse_tags(const std::string& text);

SequenceDataset load_sequence(const std::filesystem::path& dir);

// Results CSV: "frame_index,x,y,w,h" with a 1-based index, no header.
void write_results_csv(const std::filesystem::path& path, std::span<const Box> boxes);
std::vector<Box> read_results_csv(const std::filesystem::path& path);
void write_curve_csv(const std::filesystem::path& path, const EvalCurve& curve);

enum class ClutterLevel { None, Low, Medium, High };
ClutterLevel parse_clutter(const std::string& s);

struct MotionSegment {
  int frames = 0;  // frames this velocity applies to; the last segment runs to the end
  double vx = 0, vy = 0;
};

struct SynthConfig {
  int width = 64, height = 64;
  int length = 100;
  int target_size = 12;
  double start_x = 10, start_y = 10;  // top-left of the target in frame 1
  std::vector<MotionSegment> path;    // empty means stationary
  ClutterLevel clutter = ClutterLevel::Medium;
  std::uint64_t seed = 1;
};

struct SyntheticSequence {
  std::vector<Image> frames;
  std::vector<Box> ground_truth;
};

// Top-left positions along the path; one per frame.
std::vector<Box> synth_ground_truth(const SynthConfig& cfg);
SyntheticSequence synth_sequence(const SynthConfig& cfg);
void write_sequence(const SyntheticSequence& seq, const std::filesystem::path& dir,
                    std::span<const std::string> tags = {});

// Bounces a target of `size` inside the frame with piecewise-linear legs of random
// direction and speed <= max_speed px/frame.
std::vector<MotionSegment> random_bounded_path(int width, int height, int size, double start_x, double start_y,
                                               int length, double max_speed, std::uint64_t seed);

}  // namespace saltrk
