#pragma once

#include <deque>
#include <span>

#include "saltrk/common.hpp"
#include "saltrk/kernels.hpp"
#include "saltrk/saliency.hpp"

namespace saltrk {

struct TransitionEstimate {
  double mean_x = 0, mean_y = 0;  // mu_t
  double dx = 0, dy = 0;          // d_t = mu_t - previous center
  double cov_xx = 0, cov_xy = 0, cov_yy = 0;
};

// Probability mass over box-center pixels; sums to one.
struct PosteriorGrid {
  Grid mass;
  static PosteriorGrid delta(int width, int height, Point at);
  static PosteriorGrid uniform(int width, int height);
};

// Mean of the recent saliency crops at the tracked boxes.
class GenerativeFilter {
 public:
  GenerativeFilter() = default;
  GenerativeFilter(int width, int height, std::size_t memory);

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t memory() const { return memory_; }
  const Grid& values() const { return values_; }
  const std::deque<Grid>& history() const { return history_; }
  bool empty() const { return history_.empty(); }

  void push(Grid crop);
  bool operator==(const GenerativeFilter&) const = default;

 private:
  int width_ = 0, height_ = 0;
  std::size_t memory_ = 30;
  std::deque<Grid> history_;
  Grid values_;
};

// Single positive gets sigma_min^2 on the diagonal; otherwise per-axis unbiased variance floored at sigma_min^2.
TransitionEstimate estimate_transition(std::span<const Point> positive_centers, const TargetState& prev,
                                       double sigma_min = 1.0);

PosteriorGrid predict_prior(const PosteriorGrid& posterior, const TransitionEstimate& t,
                            kernels::Boundary boundary = kernels::Boundary::Clip,
                            kernels::Backend backend = kernels::Backend::Parallel);

// Box-sized window of the saliency map at the state; zero outside the frame.
Grid crop_map(const Grid& map, const TargetState& state);

void update_filter(GenerativeFilter& filter, const SaliencyMap& saliency, const TargetState& state);

Grid likelihood_map(const GenerativeFilter& filter, const SaliencyMap& saliency, double floor = 1e-12,
                    kernels::Backend backend = kernels::Backend::Parallel);

struct PosteriorUpdate {
  PosteriorGrid posterior;
  TargetState state;
  double map_probability = 0.0;
};

// First maximum in row-major scan order wins.
Point argmax(const Grid& g);

PosteriorUpdate posterior_and_map(const PosteriorGrid& prior, const Grid& likelihood, int box_w, int box_h);

}  // namespace saltrk
