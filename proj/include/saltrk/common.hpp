#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace saltrk {

// Bad user input or mismatched files. The CLI maps these to exit code 2.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Network/config shape problems.
class ConfigError : public InputError {
 public:
  using InputError::InputError;
};

// Internal invariant or call-order violation. The CLI maps these to exit code 3.
class StateError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ContractError : public StateError {
 public:
  using StateError::StateError;
};

// Axis-aligned box in frame coordinates, (x, y) is the top-left corner.
struct Box {
  double x = 0, y = 0, w = 0, h = 0;

  double center_x() const { return x + w / 2.0; }
  double center_y() const { return y + h / 2.0; }
  double area() const { return w * h; }
  bool operator==(const Box&) const = default;
};

struct Point {
  int x = 0, y = 0;
  bool operator==(const Point&) const = default;
};

// Target location on the integer pixel grid plus the fixed box size.
struct TargetState {
  int cx = 0, cy = 0;
  int w = 1, h = 1;

  int left() const { return cx - w / 2; }
  int top() const { return cy - h / 2; }
  Box box() const {
    return {static_cast<double>(left()), static_cast<double>(top()),
            static_cast<double>(w), static_cast<double>(h)};
  }
  Point center() const { return {cx, cy}; }
  static TargetState from_box(const Box& b);
  bool operator==(const TargetState&) const = default;
};

// Row-major 2-D grid of doubles, used for saliency, likelihood and posterior maps.
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, double fill = 0.0)
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill) {
    if (width < 0 || height < 0) throw ConfigError("negative grid size");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int x, int y) { return data_[index(x, y)]; }
  double operator()(int x, int y) const { return data_[index(x, y)]; }
  bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double sum() const;
  double max() const;
  bool same_shape(const Grid& o) const { return width_ == o.width_ && height_ == o.height_; }
  bool operator==(const Grid&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }
  int width_ = 0, height_ = 0;
  std::vector<double> data_;
};

// Channel-major (C, H, W) tensor of doubles.
class Tensor {
 public:
  Tensor() = default;
  Tensor(int channels, int height, int width, double fill = 0.0)
      : c_(channels), h_(height), w_(width),
        data_(static_cast<std::size_t>(channels) * height * width, fill) {}

  int channels() const { return c_; }
  int height() const { return h_; }
  int width() const { return w_; }
  std::size_t size() const { return data_.size(); }

  double& at(int c, int y, int x) { return data_[(static_cast<std::size_t>(c) * h_ + y) * w_ + x]; }
  double at(int c, int y, int x) const { return data_[(static_cast<std::size_t>(c) * h_ + y) * w_ + x]; }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }
  bool operator==(const Tensor&) const = default;

 private:
  int c_ = 0, h_ = 0, w_ = 0;
  std::vector<double> data_;
};

// Interleaved (H, W, C) image with intensities in [0, 1].
class Image {
 public:
  Image() = default;
  Image(int width, int height, int channels, double fill = 0.0)
      : w_(width), h_(height), c_(channels),
        data_(static_cast<std::size_t>(width) * height * channels, fill) {}

  int width() const { return w_; }
  int height() const { return h_; }
  int channels() const { return c_; }
  bool empty() const { return data_.empty(); }

  double& at(int x, int y, int c) { return data_[(static_cast<std::size_t>(y) * w_ + x) * c_ + c]; }
  double at(int x, int y, int c) const { return data_[(static_cast<std::size_t>(y) * w_ + x) * c_ + c]; }

  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }
  bool operator==(const Image&) const = default;

 private:
  int w_ = 0, h_ = 0, c_ = 0;
  std::vector<double> data_;
};

}  // namespace saltrk
