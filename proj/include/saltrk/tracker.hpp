#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "saltrk/common.hpp"
#include "saltrk/feature_net.hpp"
#include "saltrk/localization.hpp"
#include "saltrk/online_svm.hpp"
#include "saltrk/saliency.hpp"

namespace saltrk {

struct TrackerConfig {
  int n_samples = 120;
  double label_threshold = 0.3;  // IoU below this is a negative
  int filter_memory = 30;
  double svm_C = 1.0;
  std::size_t sv_budget = 500;
  double sigma_min = 1.0;
  double likelihood_floor = 1e-12;
  std::uint64_t rng_seed = 0;
  // Sampling std is sample_std_scale * sqrt(w * h); 0 pins every sample to the previous center.
  double sample_std_scale = 0.5;

  void validate() const;
};

// key=value lines, '#' comments. Unknown keys are an error.
TrackerConfig parse_config(const std::string& text, TrackerConfig base = {});
TrackerConfig load_config(const std::filesystem::path& path, TrackerConfig base = {});

enum class SampleLabel { Positive, Negative, Excluded };

struct LabeledSample {
  TargetState state;
  SampleLabel label = SampleLabel::Excluded;
};

std::vector<TargetState> draw_samples(const TargetState& prev, int count, double std_dev, int frame_width,
                                      int frame_height, std::mt19937_64& rng);

// The optimal state is always the single positive (appended when not among the samples).
std::vector<LabeledSample> label_samples(const TargetState& optimal, std::span<const TargetState> samples,
                                         double threshold);

struct FrameRecord {
  int frame_index = 0;  // 1-based
  TargetState state;
  int positive_count = 0;
  double map_probability = 0.0;
  bool models_updated = false;
};

struct FrameOutput {
  FrameRecord record;
  SaliencyMap saliency;
  Grid likelihood;
  PosteriorGrid posterior;
};

using TrackResult = std::vector<FrameRecord>;

class TrackerSession {
 public:
  TrackerSession(FeatureNet net, TrackerConfig config);

  FrameOutput initialize(const Image& frame, const Box& ground_truth);
  FrameOutput step(const Image& frame);

  const TrackerConfig& config() const { return config_; }
  const FeatureNet& network() const { return net_; }
  const SvmModel& svm() const { return svm_; }
  const GenerativeFilter& filter() const { return filter_; }
  const PosteriorGrid& posterior() const { return posterior_; }
  const TargetState& state() const { return state_; }
  int frames_processed() const { return frame_index_; }

 private:
  struct Scored {
    std::vector<TargetState> states;
    std::vector<Activations> acts;
    std::vector<double> scores;
  };

  Scored score_candidates(const Image& frame, std::vector<TargetState> states) const;
  SaliencyMap build_saliency(const Scored& scored, int frame_w, int frame_h) const;
  void train(const Image& frame, const Scored& scored, const TargetState& optimal);
  TransitionEstimate fallback_transition();

  FeatureNet net_;
  TrackerConfig config_;
  SvmModel svm_;
  GenerativeFilter filter_;
  PosteriorGrid posterior_;
  TargetState state_;
  std::mt19937_64 rng_;
  int frame_w_ = 0, frame_h_ = 0;
  int frame_index_ = 0;

  std::optional<TransitionEstimate> last_transition_;
  int gap_frames_ = 0;
};

// Runs initialize on frame 0 and step on the rest. The callback, when set, sees every frame's output.
template <typename FrameSource, typename Callback>
TrackResult run_sequence(TrackerSession& session, std::size_t frame_count, FrameSource&& frame_at,
                         const Box& init, Callback&& on_frame) {
  TrackResult result;
  result.reserve(frame_count);
  for (std::size_t i = 0; i < frame_count; ++i) {
    FrameOutput out = i == 0 ? session.initialize(frame_at(i), init) : session.step(frame_at(i));
    on_frame(out);
    result.push_back(out.record);
  }
  return result;
}

}  // namespace saltrk
