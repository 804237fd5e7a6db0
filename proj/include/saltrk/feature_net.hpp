#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "saltrk/common.hpp"

namespace saltrk {

inline constexpr const char* kNetMagic = "SALTRK-NET-1";

enum class LayerKind { Convolution, Relu, MaxPool, FullyConnected };

std::string to_string(LayerKind kind);

struct Shape {
  int channels = 0, height = 0, width = 0;
  std::size_t count() const { return static_cast<std::size_t>(channels) * height * width; }
  bool operator==(const Shape&) const = default;
};

struct LayerSpec {
  LayerKind kind = LayerKind::Relu;
  // convolution
  int kernel_h = 0, kernel_w = 0, in_channels = 0, out_channels = 0, padding = 0;
  // convolution and max-pool
  int stride = 1;
  // max-pool
  int window = 0;
  // fully-connected
  int in_dim = 0, out_dim = 0;

  static LayerSpec conv(int kh, int kw, int in_ch, int out_ch, int stride = 1, int pad = 0);
  static LayerSpec relu();
  static LayerSpec max_pool(int window, int stride);
  static LayerSpec fully_connected(int in_dim, int out_dim);

  // Number of kernel and bias parameters this layer owns.
  std::size_t kernel_count() const;
  std::size_t bias_count() const;
};

struct NetworkSpec {
  Shape input;  // (channels, height, width)
  std::vector<LayerSpec> layers;

  // Output shape of every layer; throws ConfigError naming the first incompatible layer.
  std::vector<Shape> output_shapes() const;
  int feature_dim() const;
  std::size_t parameter_count() const;
};

struct LayerWeights {
  std::vector<double> kernel;
  std::vector<double> bias;
};

using WeightStore = std::vector<LayerWeights>;

struct FeatureVector {
  std::vector<double> values;
  std::size_t dim() const { return values.size(); }
};

// Pixels in (C, H, W) order, cropped from `source_box` of a frame.
struct ImagePatch {
  Tensor pixels;
  Box source_box;
};

using GradientMap = Tensor;

// Everything forward() computed for one patch; backward() reads only this.
struct Activations {
  std::vector<Tensor> outputs;                // outputs[0] is the input, outputs[l+1] is layer l's output
  std::vector<std::vector<int>> pool_argmax;  // per layer; flat input index of each pooled max
  bool empty() const { return outputs.empty(); }
};

class FeatureNet {
 public:
  FeatureNet() = default;
  FeatureNet(NetworkSpec spec, WeightStore weights);

  const NetworkSpec& spec() const { return spec_; }
  const WeightStore& weights() const { return weights_; }
  int feature_dim() const { return feature_dim_; }
  Shape input_shape() const { return spec_.input; }

  FeatureVector forward(const ImagePatch& patch) const;
  Activations forward_cached(const ImagePatch& patch) const;

  // Gradient of dot(feature_grad, phi(patch)) with respect to the patch pixels.
  GradientMap backward(const Activations& acts, std::span<const double> feature_grad) const;
  GradientMap backward_to_input(const ImagePatch& patch, std::span<const double> feature_grad) const;

 private:
  void check_patch(const ImagePatch& patch) const;

  NetworkSpec spec_;
  WeightStore weights_;
  std::vector<Shape> shapes_;
  int feature_dim_ = 0;
};

struct LayerChecksum {
  std::size_t index = 0;
  LayerKind kind = LayerKind::Relu;
  std::size_t float_count = 0;
  double sum = 0.0;
};

struct LoadedNetwork {
  NetworkSpec spec;
  WeightStore weights;
  std::vector<LayerChecksum> report;
};

NetworkSpec parse_network_spec(const std::string& manifest_text);
std::string format_network_spec(const NetworkSpec& spec);

// Splits a float blob (magic already stripped) into per-layer weights; kernels before biases.
WeightStore unpack_weights(const NetworkSpec& spec, std::span<const float> blob);
std::vector<float> pack_weights(const NetworkSpec& spec, const WeightStore& weights);

LoadedNetwork load_weights(const std::filesystem::path& spec_file, const std::filesystem::path& weight_file);
void save_network(const NetworkSpec& spec, const WeightStore& weights,
                  const std::filesystem::path& spec_file, const std::filesystem::path& weight_file);

// Crops `box` from the frame (edge pixels replicated outside it) and resizes bilinearly to `shape`.
ImagePatch crop_patch(const Image& frame, const Box& box, Shape shape);

// Fixed color/texture detector network used by the synthetic benchmarks and the CLI demo.
LoadedNetwork make_handcrafted_network();

}  // namespace saltrk
