#include "saltrk/tracker.hpp"

#include <algorithm>
#include <cmath>

#include "saltrk/metrics.hpp"

namespace saltrk {

namespace {

int clamp_center(int c, int extent, int frame) {
  if (extent <= frame) return std::clamp(c, extent / 2, frame - extent + extent / 2);
  return std::clamp(c, 0, frame - 1);
}

TargetState clamp_state(TargetState s, int fw, int fh) {
  s.cx = clamp_center(s.cx, s.w, fw);
  s.cy = clamp_center(s.cy, s.h, fh);
  return s;
}

}  // namespace

std::vector<TargetState> draw_samples(const TargetState& prev, int count, double std_dev, int frame_width,
                                      int frame_height, std::mt19937_64& rng) {
  std::vector<TargetState> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int i = 0; i < count; ++i) {
    TargetState s = prev;
    double ox = noise(rng) * std_dev, oy = noise(rng) * std_dev;
    s.cx = prev.cx + static_cast<int>(std::lround(ox));
    s.cy = prev.cy + static_cast<int>(std::lround(oy));
    out.push_back(clamp_state(s, frame_width, frame_height));
  }
  return out;
}

std::vector<LabeledSample> label_samples(const TargetState& optimal, std::span<const TargetState> samples,
                                         double threshold) {
  std::vector<LabeledSample> out;
  out.reserve(samples.size() + 1);
  bool have_positive = false;
  const Box ob = optimal.box();
  for (const auto& s : samples) {
    LabeledSample ls{s, SampleLabel::Excluded};
    if (s == optimal) {
      if (!have_positive) ls.label = SampleLabel::Positive;
      have_positive = true;
    } else if (overlap(ob, s.box()) < threshold) {
      ls.label = SampleLabel::Negative;
    }
    out.push_back(ls);
  }
  if (!have_positive) out.push_back({optimal, SampleLabel::Positive});
  return out;
}

TrackerSession::TrackerSession(FeatureNet net, TrackerConfig config)
    : net_(std::move(net)), config_(config), svm_(config.svm_C) {
  config_.validate();
}

TrackerSession::Scored TrackerSession::score_candidates(const Image& frame, std::vector<TargetState> states) const {
  Scored s;
  s.states = std::move(states);
  const auto n = static_cast<std::ptrdiff_t>(s.states.size());
  s.acts.resize(s.states.size());
  s.scores.assign(s.states.size(), 0.0);
  const Shape shape = net_.input_shape();
#pragma omp parallel for schedule(dynamic) num_threads(kernels::active_threads())
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    s.acts[i] = net_.forward_cached(crop_patch(frame, s.states[i].box(), shape));
    s.scores[i] = svm_.predict(s.acts[i].outputs.back().values());
  }
  return s;
}

SaliencyMap TrackerSession::build_saliency(const Scored& scored, int fw, int fh) const {
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < scored.scores.size(); ++i)
    if (scored.scores[i] > 0.0) positives.push_back(i);
  std::vector<Grid> grids(positives.size());
  const auto& w = svm_.weight_vector();
  const auto n = static_cast<std::ptrdiff_t>(positives.size());
#pragma omp parallel for schedule(dynamic) num_threads(kernels::active_threads())
  for (std::ptrdiff_t k = 0; k < n; ++k) {
    std::size_t i = positives[k];
    SampleGradient sg = sample_gradient(net_, scored.acts[i], scored.states[i].box(), w, scored.scores[i]);
    grids[k] = project_and_pad(sg, fw, fh).values;
  }
  return aggregate(grids, fw, fh, frame_index_);
}

void TrackerSession::train(const Image& frame, const Scored& scored, const TargetState& optimal) {
  auto labeled = label_samples(optimal, scored.states, config_.label_threshold);
  std::vector<LabeledExample> batch;
  batch.reserve(labeled.size());
  for (std::size_t i = 0; i < labeled.size(); ++i) {
    if (labeled[i].label == SampleLabel::Excluded) continue;
    const int y = labeled[i].label == SampleLabel::Positive ? 1 : -1;
    if (i < scored.states.size()) {
      batch.push_back({scored.acts[i].outputs.back().values(), y});
    } else {
      // The optimal state was not among the candidates.
      ImagePatch p = crop_patch(frame, optimal.box(), net_.input_shape());
      batch.push_back({net_.forward(p).values, y});
    }
  }
  // Positive first so each update starts from a two-class problem as early as possible.
  std::stable_partition(batch.begin(), batch.end(), [](const LabeledExample& e) { return e.label > 0; });
  svm_.partial_fit(batch);
  svm_.prune_to_budget(config_.sv_budget);
}

TransitionEstimate TrackerSession::fallback_transition() {
  ++gap_frames_;
  const double factor = std::min(std::pow(2.0, gap_frames_), 4.0);
  TransitionEstimate t;
  if (last_transition_) t = *last_transition_;
  else t.cov_xx = t.cov_yy = config_.sigma_min * config_.sigma_min;
  t.cov_xx *= factor;
  t.cov_yy *= factor;
  t.cov_xy *= factor;
  return t;
}

FrameOutput TrackerSession::initialize(const Image& frame, const Box& gt) {
  if (frame.empty()) throw InputError("empty first frame");
  frame_w_ = frame.width();
  frame_h_ = frame.height();
  TargetState s = TargetState::from_box(gt);
  if (s.cx < 0 || s.cy < 0 || s.cx >= frame_w_ || s.cy >= frame_h_)
    throw InputError("initial box center lies outside the first frame");
  state_ = s;
  frame_index_ = 1;
  rng_.seed(config_.rng_seed);
  svm_ = SvmModel(config_.svm_C);
  filter_ = GenerativeFilter(state_.w, state_.h, static_cast<std::size_t>(config_.filter_memory));
  last_transition_.reset();
  gap_frames_ = 0;

  const double std_dev = config_.sample_std_scale * std::sqrt(static_cast<double>(state_.w) * state_.h);
  auto states = draw_samples(state_, config_.n_samples, std_dev, frame_w_, frame_h_, rng_);
  states.push_back(state_);
  Scored scored = score_candidates(frame, std::move(states));
  train(frame, scored, state_);
  for (std::size_t i = 0; i < scored.states.size(); ++i)
    scored.scores[i] = svm_.predict(scored.acts[i].outputs.back().values());

  FrameOutput out;
  out.saliency = build_saliency(scored, frame_w_, frame_h_);
  update_filter(filter_, out.saliency, state_);
  posterior_ = PosteriorGrid::delta(frame_w_, frame_h_, state_.center());
  out.posterior = posterior_;
  out.likelihood = Grid(frame_w_, frame_h_, 1.0 / (static_cast<double>(frame_w_) * frame_h_));
  out.record.frame_index = frame_index_;
  out.record.state = state_;
  out.record.positive_count =
      static_cast<int>(std::count_if(scored.scores.begin(), scored.scores.end(), [](double v) { return v > 0.0; }));
  out.record.map_probability = 1.0;
  out.record.models_updated = true;
  return out;
}

FrameOutput TrackerSession::step(const Image& frame) {
  if (frame_index_ == 0) throw StateError("tracker session not initialized");
  if (frame.width() != frame_w_ || frame.height() != frame_h_)
    throw InputError("frame size " + std::to_string(frame.width()) + "x" + std::to_string(frame.height()) +
                     " differs from session frame size " + std::to_string(frame_w_) + "x" + std::to_string(frame_h_));
  ++frame_index_;

  const double std_dev = config_.sample_std_scale * std::sqrt(static_cast<double>(state_.w) * state_.h);
  Scored scored = score_candidates(frame, draw_samples(state_, config_.n_samples, std_dev, frame_w_, frame_h_, rng_));

  std::vector<Point> centers;
  for (std::size_t i = 0; i < scored.scores.size(); ++i)
    if (scored.scores[i] > 0.0) centers.push_back(scored.states[i].center());

  FrameOutput out;
  out.saliency = build_saliency(scored, frame_w_, frame_h_);

  TransitionEstimate t;
  if (!centers.empty()) {
    t = estimate_transition(centers, state_, config_.sigma_min);
  } else {
    t = fallback_transition();
  }

  PosteriorGrid prior = predict_prior(posterior_, t);
  out.likelihood = likelihood_map(filter_, out.saliency, config_.likelihood_floor);
  PosteriorUpdate upd = posterior_and_map(prior, out.likelihood, state_.w, state_.h);
  state_ = upd.state;
  posterior_ = std::move(upd.posterior);

  if (!centers.empty()) {
    train(frame, scored, state_);
    update_filter(filter_, out.saliency, state_);
    last_transition_ = t;
    gap_frames_ = 0;
  }

  out.posterior = posterior_;
  out.record.frame_index = frame_index_;
  out.record.state = state_;
  out.record.positive_count = static_cast<int>(centers.size());
  out.record.map_probability = upd.map_probability;
  out.record.models_updated = !centers.empty();
  return out;
}

}  // namespace saltrk
