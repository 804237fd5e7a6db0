#include "saltrk/saliency.hpp"

#include <algorithm>
#include <cmath>

namespace saltrk {

std::vector<double> mask_target_feature(std::span<const double> feature, std::span<const double> w) {
  if (feature.size() != w.size())
    throw InputError("mask_target_feature: feature dim " + std::to_string(feature.size()) + " vs weight dim " +
                     std::to_string(w.size()));
  std::vector<double> out(feature.size(), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k)
    if (w[k] > 0.0) out[k] = w[k] * feature[k];
  return out;
}

std::vector<double> positive_weight_routing(std::span<const double> w) {
  std::vector<double> g(w.size(), 0.0);
  for (std::size_t k = 0; k < w.size(); ++k)
    if (w[k] > 0.0) g[k] = w[k];
  return g;
}

Grid collapse_channels(const GradientMap& g) {
  Grid out(g.width(), g.height());
  for (int c = 0; c < g.channels(); ++c)
    for (int y = 0; y < g.height(); ++y)
      for (int x = 0; x < g.width(); ++x) out(x, y) = std::max(out(x, y), std::abs(g.at(c, y, x)));
  return out;
}

SampleGradient sample_gradient(const FeatureNet& net, const Activations& acts, const Box& box,
                               std::span<const double> w, double score) {
  if (!(score > 0.0)) throw ContractError("sample_gradient requires a positively scored sample");
  if (w.size() != static_cast<std::size_t>(net.feature_dim()))
    throw InputError("SVM weight dimension does not match the network feature dimension");
  auto routing = positive_weight_routing(w);
  return {collapse_channels(net.backward(acts, routing)), box, score};
}

SampleGradient sample_gradient(const FeatureNet& net, const ImagePatch& patch, std::span<const double> w,
                               double score) {
  if (!(score > 0.0)) throw ContractError("sample_gradient requires a positively scored sample");
  return sample_gradient(net, net.forward_cached(patch), patch.source_box, w, score);
}

ProjectedGradient project_and_pad(const SampleGradient& sg, int frame_width, int frame_height) {
  ProjectedGradient out{Grid(frame_width, frame_height), false};
  const Box& b = sg.box;
  const int pw = sg.map.width(), ph = sg.map.height();
  if (pw == 0 || ph == 0 || b.w <= 0 || b.h <= 0) {
    out.outside_frame = true;
    return out;
  }
  const int x0 = static_cast<int>(std::lround(b.x)), y0 = static_cast<int>(std::lround(b.y));
  const int x1 = x0 + static_cast<int>(std::lround(b.w)), y1 = y0 + static_cast<int>(std::lround(b.h));
  const int cx0 = std::max(x0, 0), cy0 = std::max(y0, 0);
  const int cx1 = std::min(x1, frame_width), cy1 = std::min(y1, frame_height);
  if (cx0 >= cx1 || cy0 >= cy1) {
    out.outside_frame = true;
    return out;
  }
  for (int py = cy0; py < cy1; ++py) {
    int v = std::clamp(static_cast<int>(std::floor((py - b.y + 0.5) * ph / b.h)), 0, ph - 1);
    for (int px = cx0; px < cx1; ++px) {
      int u = std::clamp(static_cast<int>(std::floor((px - b.x + 0.5) * pw / b.w)), 0, pw - 1);
      out.values(px, py) = sg.map(u, v);
    }
  }
  return out;
}

SaliencyMap aggregate(std::span<const Grid> grids, int frame_width, int frame_height, int frame_index,
                      kernels::Backend backend) {
  return {kernels::max_abs(grids, frame_width, frame_height, backend), frame_index};
}

}  // namespace saltrk
