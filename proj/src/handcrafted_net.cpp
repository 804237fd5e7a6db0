#include "saltrk/feature_net.hpp"

namespace saltrk {

namespace {

constexpr int kSide = 12;
constexpr double kFeatureGain = 4.0;

// Index into a conv kernel stored as [out][in][ky][kx].
std::size_t tap(int o, int i, int ky, int kx, int in_ch) {
  return ((static_cast<std::size_t>(o) * in_ch + i) * 3 + ky) * 3 + kx;
}

}  // namespace

LoadedNetwork make_handcrafted_network() {
  NetworkSpec spec;
  spec.input = {3, kSide, kSide};
  spec.layers = {LayerSpec::conv(3, 3, 3, 4, 1, 1), LayerSpec::relu(), LayerSpec::max_pool(2, 2),
                 LayerSpec::conv(3, 3, 4, 4, 1, 1), LayerSpec::relu(), LayerSpec::max_pool(2, 2),
                 LayerSpec::fully_connected(36, 36)};

  WeightStore w(spec.layers.size());
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    w[i].kernel.assign(spec.layers[i].kernel_count(), 0.0);
    w[i].bias.assign(spec.layers[i].bias_count(), 0.0);
  }

  // Colour-opponent detectors: warm (red against green+blue), cool (blue against red+green),
  // and two warm/cool boundary detectors.
  auto& c1 = w[0];
  const double warm[3] = {1.0, -0.5, -0.5}, cool[3] = {-0.5, -0.5, 1.0}, diff[3] = {1.0, 0.0, -1.0};
  for (int ky = 0; ky < 3; ++ky)
    for (int kx = 0; kx < 3; ++kx)
      for (int c = 0; c < 3; ++c) {
        c1.kernel[tap(0, c, ky, kx, 3)] = warm[c] / 9.0;
        c1.kernel[tap(1, c, ky, kx, 3)] = cool[c] / 9.0;
        if (kx != 1) c1.kernel[tap(2, c, ky, kx, 3)] = (kx == 0 ? 1.0 : -1.0) * diff[c] / 3.0;
        if (ky != 1) c1.kernel[tap(3, c, ky, kx, 3)] = (ky == 0 ? 1.0 : -1.0) * diff[c] / 3.0;
      }
  c1.bias = {-0.3, -0.3, -0.2, -0.2};

  auto& c2 = w[3];
  for (int o = 0; o < 4; ++o)
    for (int ky = 0; ky < 3; ++ky)
      for (int kx = 0; kx < 3; ++kx) c2.kernel[tap(o, o, ky, kx, 4)] = 1.0 / 9.0;
  c2.bias = {-0.02, -0.02, -0.02, -0.02};

  auto& fc = w[6];
  for (int i = 0; i < 36; ++i) fc.kernel[static_cast<std::size_t>(i) * 36 + i] = kFeatureGain;

  LoadedNetwork net{spec, w, {}};
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    LayerChecksum ck{i, spec.layers[i].kind, w[i].kernel.size() + w[i].bias.size(), 0.0};
    for (double v : w[i].kernel) ck.sum += v;
    for (double v : w[i].bias) ck.sum += v;
    net.report.push_back(ck);
  }
  return net;
}

}  // namespace saltrk
