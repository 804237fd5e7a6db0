#include "saltrk/feature_net.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace saltrk {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Convolution: return "conv";
    case LayerKind::Relu: return "relu";
    case LayerKind::MaxPool: return "maxpool";
    case LayerKind::FullyConnected: return "fc";
  }
  return "?";
}

TargetState TargetState::from_box(const Box& b) {
  TargetState s;
  s.w = std::max(1, static_cast<int>(std::lround(b.w)));
  s.h = std::max(1, static_cast<int>(std::lround(b.h)));
  s.cx = static_cast<int>(std::lround(b.x)) + s.w / 2;
  s.cy = static_cast<int>(std::lround(b.y)) + s.h / 2;
  return s;
}

double Grid::sum() const {
  double s = 0.0;
  for (double v : data_) s += v;
  return s;
}

double Grid::max() const {
  if (data_.empty()) return 0.0;
  return *std::max_element(data_.begin(), data_.end());
}

LayerSpec LayerSpec::conv(int kh, int kw, int in_ch, int out_ch, int stride, int pad) {
  LayerSpec l;
  l.kind = LayerKind::Convolution;
  l.kernel_h = kh;
  l.kernel_w = kw;
  l.in_channels = in_ch;
  l.out_channels = out_ch;
  l.stride = stride;
  l.padding = pad;
  return l;
}

LayerSpec LayerSpec::relu() { return LayerSpec{}; }

LayerSpec LayerSpec::max_pool(int window, int stride) {
  LayerSpec l;
  l.kind = LayerKind::MaxPool;
  l.window = window;
  l.stride = stride;
  return l;
}

LayerSpec LayerSpec::fully_connected(int in_dim, int out_dim) {
  LayerSpec l;
  l.kind = LayerKind::FullyConnected;
  l.in_dim = in_dim;
  l.out_dim = out_dim;
  return l;
}

std::size_t LayerSpec::kernel_count() const {
  switch (kind) {
    case LayerKind::Convolution:
      return static_cast<std::size_t>(kernel_h) * kernel_w * in_channels * out_channels;
    case LayerKind::FullyConnected:
      return static_cast<std::size_t>(in_dim) * out_dim;
    default:
      return 0;
  }
}

std::size_t LayerSpec::bias_count() const {
  switch (kind) {
    case LayerKind::Convolution: return static_cast<std::size_t>(out_channels);
    case LayerKind::FullyConnected: return static_cast<std::size_t>(out_dim);
    default: return 0;
  }
}

namespace {

std::string layer_label(std::size_t i, const LayerSpec& l) {
  return "layer " + std::to_string(i) + " (" + to_string(l.kind) + ")";
}

}  // namespace

std::vector<Shape> NetworkSpec::output_shapes() const {
  if (layers.empty()) throw ConfigError("network has no layers (no feature dimension)");
  if (input.channels <= 0 || input.height <= 0 || input.width <= 0)
    throw ConfigError("network input shape must be positive");

  std::vector<Shape> shapes;
  shapes.reserve(layers.size());
  Shape cur = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    switch (l.kind) {
      case LayerKind::Convolution: {
        if (l.kernel_h <= 0 || l.kernel_w <= 0 || l.out_channels <= 0 || l.padding < 0)
          throw ConfigError(layer_label(i, l) + ": invalid kernel geometry");
        if (l.stride < 1) throw ConfigError(layer_label(i, l) + ": stride must be >= 1");
        if (l.in_channels != cur.channels)
          throw ConfigError(layer_label(i, l) + ": expected " + std::to_string(l.in_channels) +
                            " input channels, got " + std::to_string(cur.channels));
        int oh = (cur.height + 2 * l.padding - l.kernel_h) / l.stride + 1;
        int ow = (cur.width + 2 * l.padding - l.kernel_w) / l.stride + 1;
        if (cur.height + 2 * l.padding < l.kernel_h || cur.width + 2 * l.padding < l.kernel_w)
          throw ConfigError(layer_label(i, l) + ": kernel larger than padded input");
        cur = {l.out_channels, oh, ow};
        break;
      }
      case LayerKind::Relu:
        break;
      case LayerKind::MaxPool: {
        if (l.window < 1) throw ConfigError(layer_label(i, l) + ": pool window must be >= 1");
        if (l.stride < 1) throw ConfigError(layer_label(i, l) + ": stride must be >= 1");
        if (cur.height < l.window || cur.width < l.window)
          throw ConfigError(layer_label(i, l) + ": pool window larger than input");
        cur = {cur.channels, (cur.height - l.window) / l.stride + 1, (cur.width - l.window) / l.stride + 1};
        break;
      }
      case LayerKind::FullyConnected: {
        if (l.out_dim <= 0) throw ConfigError(layer_label(i, l) + ": output dimension must be positive");
        if (static_cast<std::size_t>(l.in_dim) != cur.count())
          throw ConfigError(layer_label(i, l) + ": expected input dimension " + std::to_string(l.in_dim) +
                            ", got " + std::to_string(cur.count()));
        cur = {l.out_dim, 1, 1};
        break;
      }
    }
    shapes.push_back(cur);
  }
  return shapes;
}

int NetworkSpec::feature_dim() const { return static_cast<int>(output_shapes().back().count()); }

std::size_t NetworkSpec::parameter_count() const {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.kernel_count() + l.bias_count();
  return n;
}

FeatureNet::FeatureNet(NetworkSpec spec, WeightStore weights)
    : spec_(std::move(spec)), weights_(std::move(weights)) {
  shapes_ = spec_.output_shapes();
  if (weights_.size() != spec_.layers.size())
    throw ConfigError("weight store has " + std::to_string(weights_.size()) + " layers, spec has " +
                      std::to_string(spec_.layers.size()));
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const auto& l = spec_.layers[i];
    if (weights_[i].kernel.size() != l.kernel_count() || weights_[i].bias.size() != l.bias_count())
      throw ConfigError(layer_label(i, l) + ": expected " + std::to_string(l.kernel_count()) + "+" +
                        std::to_string(l.bias_count()) + " parameters, found " +
                        std::to_string(weights_[i].kernel.size()) + "+" + std::to_string(weights_[i].bias.size()));
  }
  feature_dim_ = static_cast<int>(shapes_.back().count());
}

void FeatureNet::check_patch(const ImagePatch& patch) const {
  const Tensor& t = patch.pixels;
  if (t.channels() != spec_.input.channels || t.height() != spec_.input.height || t.width() != spec_.input.width)
    throw ConfigError("layer 0: patch shape " + std::to_string(t.channels()) + "x" + std::to_string(t.height()) +
                      "x" + std::to_string(t.width()) + " does not match network input");
  for (double v : t.values())
    if (!std::isfinite(v)) throw InputError("patch contains non-finite intensities");
}

namespace {

Tensor conv_forward(const Tensor& in, const LayerSpec& l, const LayerWeights& w, Shape out_shape) {
  Tensor out(out_shape.channels, out_shape.height, out_shape.width);
  const int kh = l.kernel_h, kw = l.kernel_w, ic = l.in_channels;
  for (int o = 0; o < out_shape.channels; ++o) {
    const double* wo = w.kernel.data() + static_cast<std::size_t>(o) * ic * kh * kw;
    for (int y = 0; y < out_shape.height; ++y) {
      for (int x = 0; x < out_shape.width; ++x) {
        double acc = w.bias[o];
        for (int c = 0; c < ic; ++c) {
          for (int dy = 0; dy < kh; ++dy) {
            int iy = y * l.stride + dy - l.padding;
            if (iy < 0 || iy >= in.height()) continue;
            for (int dx = 0; dx < kw; ++dx) {
              int ix = x * l.stride + dx - l.padding;
              if (ix < 0 || ix >= in.width()) continue;
              acc += wo[(c * kh + dy) * kw + dx] * in.at(c, iy, ix);
            }
          }
        }
        out.at(o, y, x) = acc;
      }
    }
  }
  return out;
}

Tensor conv_backward(const Tensor& grad_out, const LayerSpec& l, const LayerWeights& w, Shape in_shape) {
  Tensor grad_in(in_shape.channels, in_shape.height, in_shape.width);
  const int kh = l.kernel_h, kw = l.kernel_w, ic = l.in_channels;
  for (int o = 0; o < grad_out.channels(); ++o) {
    const double* wo = w.kernel.data() + static_cast<std::size_t>(o) * ic * kh * kw;
    for (int y = 0; y < grad_out.height(); ++y) {
      for (int x = 0; x < grad_out.width(); ++x) {
        double g = grad_out.at(o, y, x);
        if (g == 0.0) continue;
        for (int c = 0; c < ic; ++c) {
          for (int dy = 0; dy < kh; ++dy) {
            int iy = y * l.stride + dy - l.padding;
            if (iy < 0 || iy >= in_shape.height) continue;
            for (int dx = 0; dx < kw; ++dx) {
              int ix = x * l.stride + dx - l.padding;
              if (ix < 0 || ix >= in_shape.width) continue;
              grad_in.at(c, iy, ix) += wo[(c * kh + dy) * kw + dx] * g;
            }
          }
        }
      }
    }
  }
  return grad_in;
}

// Ties go to the first maximal element in scan order.
Tensor pool_forward(const Tensor& in, const LayerSpec& l, Shape out_shape, std::vector<int>& argmax) {
  Tensor out(out_shape.channels, out_shape.height, out_shape.width);
  argmax.assign(out.size(), 0);
  std::size_t k = 0;
  for (int c = 0; c < out_shape.channels; ++c) {
    for (int y = 0; y < out_shape.height; ++y) {
      for (int x = 0; x < out_shape.width; ++x, ++k) {
        double best = -std::numeric_limits<double>::infinity();
        int best_idx = 0;
        for (int dy = 0; dy < l.window; ++dy) {
          for (int dx = 0; dx < l.window; ++dx) {
            int iy = y * l.stride + dy, ix = x * l.stride + dx;
            double v = in.at(c, iy, ix);
            if (v > best) {
              best = v;
              best_idx = (c * in.height() + iy) * in.width() + ix;
            }
          }
        }
        out.at(c, y, x) = best;
        argmax[k] = best_idx;
      }
    }
  }
  return out;
}

}  // namespace

Activations FeatureNet::forward_cached(const ImagePatch& patch) const {
  check_patch(patch);
  Activations acts;
  acts.outputs.reserve(spec_.layers.size() + 1);
  acts.pool_argmax.resize(spec_.layers.size());
  acts.outputs.push_back(patch.pixels);

  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& l = spec_.layers[i];
    const Tensor& in = acts.outputs.back();
    Tensor out;
    switch (l.kind) {
      case LayerKind::Convolution:
        out = conv_forward(in, l, weights_[i], shapes_[i]);
        break;
      case LayerKind::Relu:
        out = in;
        for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
        break;
      case LayerKind::MaxPool:
        out = pool_forward(in, l, shapes_[i], acts.pool_argmax[i]);
        break;
      case LayerKind::FullyConnected: {
        out = Tensor(l.out_dim, 1, 1);
        const auto& src = in.values();
        for (int o = 0; o < l.out_dim; ++o) {
          const double* row = weights_[i].kernel.data() + static_cast<std::size_t>(o) * l.in_dim;
          double acc = weights_[i].bias[o];
          for (int j = 0; j < l.in_dim; ++j) acc += row[j] * src[j];
          out.values()[o] = acc;
        }
        break;
      }
    }
    acts.outputs.push_back(std::move(out));
  }
  return acts;
}

FeatureVector FeatureNet::forward(const ImagePatch& patch) const {
  Activations acts = forward_cached(patch);
  return FeatureVector{std::move(acts.outputs.back().values())};
}

GradientMap FeatureNet::backward(const Activations& acts, std::span<const double> feature_grad) const {
  if (acts.empty() || acts.outputs.size() != spec_.layers.size() + 1)
    throw StateError("backward called without a matching forward activation cache");
  if (feature_grad.size() != static_cast<std::size_t>(feature_dim_))
    throw ConfigError("feature gradient has dimension " + std::to_string(feature_grad.size()) + ", expected " +
                      std::to_string(feature_dim_));

  const Shape last = shapes_.back();
  Tensor grad(last.channels, last.height, last.width);
  std::copy(feature_grad.begin(), feature_grad.end(), grad.values().begin());

  for (std::size_t i = spec_.layers.size(); i-- > 0;) {
    const LayerSpec& l = spec_.layers[i];
    const Tensor& in = acts.outputs[i];
    Shape in_shape{in.channels(), in.height(), in.width()};
    switch (l.kind) {
      case LayerKind::Convolution:
        grad = conv_backward(grad, l, weights_[i], in_shape);
        break;
      case LayerKind::Relu: {
        auto& g = grad.values();
        const auto& x = in.values();
        for (std::size_t k = 0; k < g.size(); ++k)
          if (!(x[k] > 0.0)) g[k] = 0.0;
        break;
      }
      case LayerKind::MaxPool: {
        Tensor gin(in_shape.channels, in_shape.height, in_shape.width);
        const auto& route = acts.pool_argmax[i];
        for (std::size_t k = 0; k < route.size(); ++k) gin.values()[route[k]] += grad.values()[k];
        grad = std::move(gin);
        break;
      }
      case LayerKind::FullyConnected: {
        Tensor gin(in_shape.channels, in_shape.height, in_shape.width);
        auto& dst = gin.values();
        for (int o = 0; o < l.out_dim; ++o) {
          double g = grad.values()[o];
          if (g == 0.0) continue;
          const double* row = weights_[i].kernel.data() + static_cast<std::size_t>(o) * l.in_dim;
          for (int j = 0; j < l.in_dim; ++j) dst[j] += row[j] * g;
        }
        grad = std::move(gin);
        break;
      }
    }
  }
  return grad;
}

GradientMap FeatureNet::backward_to_input(const ImagePatch& patch, std::span<const double> feature_grad) const {
  return backward(forward_cached(patch), feature_grad);
}

ImagePatch crop_patch(const Image& frame, const Box& box, Shape shape) {
  if (frame.empty()) throw InputError("cannot crop from an empty frame");
  if (box.w <= 0 || box.h <= 0) throw InputError("crop box must be positive-sized");
  if (shape.channels != frame.channels())
    throw ConfigError("network expects " + std::to_string(shape.channels) + " channels, frame has " +
                      std::to_string(frame.channels()));
  ImagePatch patch{Tensor(shape.channels, shape.height, shape.width), box};
  const double sx = box.w / shape.width, sy = box.h / shape.height;
  auto clampi = [](int v, int hi) { return std::clamp(v, 0, hi); };
  for (int y = 0; y < shape.height; ++y) {
    double fy = box.y + (y + 0.5) * sy - 0.5;
    int y0 = static_cast<int>(std::floor(fy));
    double ty = fy - y0;
    int ya = clampi(y0, frame.height() - 1), yb = clampi(y0 + 1, frame.height() - 1);
    for (int x = 0; x < shape.width; ++x) {
      double fx = box.x + (x + 0.5) * sx - 0.5;
      int x0 = static_cast<int>(std::floor(fx));
      double tx = fx - x0;
      int xa = clampi(x0, frame.width() - 1), xb = clampi(x0 + 1, frame.width() - 1);
      for (int c = 0; c < shape.channels; ++c) {
        double top = (1 - tx) * frame.at(xa, ya, c) + tx * frame.at(xb, ya, c);
        double bot = (1 - tx) * frame.at(xa, yb, c) + tx * frame.at(xb, yb, c);
        patch.pixels.at(c, y, x) = (1 - ty) * top + ty * bot;
      }
    }
  }
  return patch;
}

}  // namespace saltrk
