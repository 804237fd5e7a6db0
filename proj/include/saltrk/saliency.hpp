#pragma once

#include <span>
#include <vector>

#include "saltrk/common.hpp"
#include "saltrk/feature_net.hpp"
#include "saltrk/kernels.hpp"

namespace saltrk {

// Per-pixel gradient magnitude of one positively scored sample, in patch coordinates.
struct SampleGradient {
  Grid map;
  Box box;
  double score = 0.0;
};

struct ProjectedGradient {
  Grid values;                // frame sized, zero outside the sample box
  bool outside_frame = false; // box did not intersect the frame at all
};

struct SaliencyMap {
  Grid values;
  int frame_index = 0;
};

// phi+_k = w_k * phi_k where w_k > 0, else 0.
std::vector<double> mask_target_feature(std::span<const double> feature, std::span<const double> w);

// Feature-space gradient of sum_{w_k > 0} w_k phi_k, i.e. w_k * [w_k > 0].
std::vector<double> positive_weight_routing(std::span<const double> w);

// Max of |value| over channels at every pixel.
Grid collapse_channels(const GradientMap& g);

SampleGradient sample_gradient(const FeatureNet& net, const ImagePatch& patch, std::span<const double> w, double score);
// Same, reusing a forward pass already run on the patch.
SampleGradient sample_gradient(const FeatureNet& net, const Activations& acts, const Box& box,
                               std::span<const double> w, double score);

ProjectedGradient project_and_pad(const SampleGradient& sg, int frame_width, int frame_height);

SaliencyMap aggregate(std::span<const Grid> grids, int frame_width, int frame_height, int frame_index = 0,
                      kernels::Backend backend = kernels::Backend::Parallel);

}  // namespace saltrk
