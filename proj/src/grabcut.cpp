#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "saltrk/segmentation.hpp"

namespace saltrk {

namespace {

using Color = Eigen::Vector3d;

struct Component {
  double weight = 0.0;
  Color mean = Color::Zero();
  Eigen::Matrix3d inv_cov = Eigen::Matrix3d::Identity();
  double log_det = 0.0;
};

class ColorModel {
 public:
  explicit ColorModel(const GrabCutParams& p) : params_(p) {}

  // Energy of one color under component k; +inf for unused components.
  double component_energy(const Color& z, int k) const {
    const Component& c = comps_[k];
    if (c.weight <= 0.0) return std::numeric_limits<double>::infinity();
    Color d = z - c.mean;
    return -std::log(c.weight) + 0.5 * c.log_det + 0.5 * d.dot(c.inv_cov * d);
  }

  std::pair<double, int> best(const Color& z) const {
    double e = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int k = 0; k < static_cast<int>(comps_.size()); ++k) {
      double v = component_energy(z, k);
      if (v < e) {
        e = v;
        arg = k;
      }
    }
    return {e, arg};
  }

  // Maximum-likelihood fit of every component to its assigned colors.
  void fit(const std::vector<Color>& colors, const std::vector<int>& assign) {
    const int K = params_.components;
    comps_.assign(K, Component{});
    std::vector<Color> sum(K, Color::Zero());
    std::vector<Eigen::Matrix3d> outer(K, Eigen::Matrix3d::Zero());
    std::vector<double> count(K, 0.0);
    for (std::size_t i = 0; i < colors.size(); ++i) {
      int k = assign[i];
      sum[k] += colors[i];
      outer[k] += colors[i] * colors[i].transpose();
      count[k] += 1.0;
    }
    const double total = static_cast<double>(colors.size());
    for (int k = 0; k < K; ++k) {
      if (count[k] == 0.0) continue;
      Component& c = comps_[k];
      c.weight = count[k] / total;
      c.mean = sum[k] / count[k];
      Eigen::Matrix3d cov = outer[k] / count[k] - c.mean * c.mean.transpose();
      cov = 0.5 * (cov + cov.transpose());
      // Clamping eigenvalues at the floor is the ML covariance subject to cov >= floor * I, so
      // refitting never raises the energy.
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
      const Eigen::Vector3d lambda = eig.eigenvalues().cwiseMax(params_.variance_floor);
      c.inv_cov = eig.eigenvectors() * lambda.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
      c.log_det = lambda.array().log().sum();
    }
  }

  // k-means on the colors, seeded from luminance quantiles, then an ML fit.
  void init(const std::vector<Color>& colors) {
    const int K = params_.components;
    std::vector<int> assign(colors.size(), 0);
    if (colors.empty()) {
      comps_.assign(K, Component{});
      return;
    }
    std::vector<std::size_t> order(colors.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return colors[a].sum() < colors[b].sum(); });
    std::vector<Color> centers(K);
    for (int k = 0; k < K; ++k) centers[k] = colors[order[static_cast<std::size_t>((k + 0.5) / K * colors.size())]];
    for (int iter = 0; iter < 10; ++iter) {
      for (std::size_t i = 0; i < colors.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k) {
          double d = (colors[i] - centers[k]).squaredNorm();
          if (d < best) {
            best = d;
            assign[i] = k;
          }
        }
      }
      std::vector<Color> sum(K, Color::Zero());
      std::vector<int> cnt(K, 0);
      for (std::size_t i = 0; i < colors.size(); ++i) {
        sum[assign[i]] += colors[i];
        ++cnt[assign[i]];
      }
      for (int k = 0; k < K; ++k)
        if (cnt[k]) centers[k] = sum[k] / cnt[k];
    }
    fit(colors, assign);
  }

 private:
  GrabCutParams params_;
  std::vector<Component> comps_;
};

struct PairTerm {
  int a, b;
  double weight;
};

struct Problem {
  int width, height;
  std::vector<Color> colors;
  std::vector<PairTerm> pairs;
};

Problem build_problem(const Image& image, double gamma) {
  Problem p{image.width(), image.height(), {}, {}};
  const int n = p.width * p.height;
  p.colors.resize(n);
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x) {
      Color c;
      for (int ch = 0; ch < 3; ++ch) c[ch] = image.at(x, y, image.channels() == 1 ? 0 : ch);
      p.colors[y * p.width + x] = c;
    }
  // 8-neighborhood, each unordered pair once.
  const int dx[4] = {1, 0, 1, -1}, dy[4] = {0, 1, 1, 1};
  double sum_sq = 0.0;
  std::size_t pairs = 0;
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x)
      for (int d = 0; d < 4; ++d) {
        int nx = x + dx[d], ny = y + dy[d];
        if (nx < 0 || ny < 0 || nx >= p.width || ny >= p.height) continue;
        sum_sq += (p.colors[y * p.width + x] - p.colors[ny * p.width + nx]).squaredNorm();
        ++pairs;
      }
  const double beta = sum_sq > 0.0 ? 1.0 / (2.0 * sum_sq / static_cast<double>(pairs)) : 0.0;
  for (int y = 0; y < p.height; ++y)
    for (int x = 0; x < p.width; ++x)
      for (int d = 0; d < 4; ++d) {
        int nx = x + dx[d], ny = y + dy[d];
        if (nx < 0 || ny < 0 || nx >= p.width || ny >= p.height) continue;
        int a = y * p.width + x, b = ny * p.width + nx;
        double dist = (dx[d] != 0 && dy[d] != 0) ? std::sqrt(2.0) : 1.0;
        p.pairs.push_back({a, b, gamma / dist * std::exp(-beta * (p.colors[a] - p.colors[b]).squaredNorm())});
      }
  return p;
}

double energy(const Problem& p, const std::vector<std::uint8_t>& alpha, const ColorModel& fg, const ColorModel& bg) {
  double e = 0.0;
  for (std::size_t i = 0; i < p.colors.size(); ++i) e += (alpha[i] ? fg : bg).best(p.colors[i]).first;
  for (const auto& pt : p.pairs)
    if (alpha[pt.a] != alpha[pt.b]) e += pt.weight;
  return e;
}

std::vector<std::uint8_t> cut(const Problem& p, const Trimap& trimap, const ColorModel& fg, const ColorModel& bg) {
  const int n = static_cast<int>(p.colors.size());
  const int source = n, sink = n + 1;
  FlowNetwork net(n + 2, source, sink);
  double hard = 1.0;
  for (const auto& pt : p.pairs) hard += 2.0 * pt.weight;

  for (int i = 0; i < n; ++i) {
    switch (trimap.labels[i]) {
      case TrimapLabel::Foreground: net.add_edge(source, i, hard); break;
      case TrimapLabel::Background: net.add_edge(i, sink, hard); break;
      case TrimapLabel::Unknown: {
        double ufg = fg.best(p.colors[i]).first, ubg = bg.best(p.colors[i]).first;
        if (!std::isfinite(ufg) && !std::isfinite(ubg)) ufg = ubg = 0.0;
        else if (!std::isfinite(ufg)) ufg = ubg + hard;
        else if (!std::isfinite(ubg)) ubg = ufg + hard;
        double lo = std::min(ufg, ubg);
        // Source side is foreground: s->i is cut when i ends up background.
        if (ubg - lo > 0.0) net.add_edge(source, i, ubg - lo);
        if (ufg - lo > 0.0) net.add_edge(i, sink, ufg - lo);
        break;
      }
    }
  }
  for (const auto& pt : p.pairs) {
    net.add_edge(pt.a, pt.b, pt.weight);
    net.add_edge(pt.b, pt.a, pt.weight);
  }
  MaxFlowResult r = max_flow(net);
  std::vector<std::uint8_t> alpha(n);
  for (int i = 0; i < n; ++i) alpha[i] = r.source_side[i] ? 1 : 0;
  return alpha;
}

}  // namespace

GrabCutResult grabcut(const Image& image, const Trimap& trimap, int iterations, const GrabCutParams& params) {
  if (image.width() != trimap.width || image.height() != trimap.height)
    throw InputError("grabcut: trimap and image sizes differ");
  if (image.channels() != 1 && image.channels() != 3) throw InputError("grabcut: image must have 1 or 3 channels");
  if (!trimap.solvable()) throw StateError("unsolvable trimap: need foreground and background seeds");
  if (iterations < 0) throw InputError("grabcut: iterations must be >= 0");
  if (params.components < 1) throw ConfigError("grabcut: need at least one mixture component");

  const Problem p = build_problem(image, params.gamma);
  std::vector<Color> fg_seed, bg_seed;
  for (std::size_t i = 0; i < p.colors.size(); ++i) {
    if (trimap.labels[i] == TrimapLabel::Foreground) fg_seed.push_back(p.colors[i]);
    if (trimap.labels[i] == TrimapLabel::Background) bg_seed.push_back(p.colors[i]);
  }
  ColorModel fg(params), bg(params);
  fg.init(fg_seed);
  bg.init(bg_seed);

  GrabCutResult out;
  out.mask = cut(p, trimap, fg, bg);
  out.energies.push_back(energy(p, out.mask, fg, bg));

  for (int it = 0; it < iterations; ++it) {
    std::vector<Color> fc, bc;
    std::vector<int> fa, ba;
    for (std::size_t i = 0; i < p.colors.size(); ++i) {
      if (out.mask[i]) {
        fc.push_back(p.colors[i]);
        fa.push_back(fg.best(p.colors[i]).second);
      } else {
        bc.push_back(p.colors[i]);
        ba.push_back(bg.best(p.colors[i]).second);
      }
    }
    fg.fit(fc, fa);
    bg.fit(bc, ba);
    out.mask = cut(p, trimap, fg, bg);
    out.energies.push_back(energy(p, out.mask, fg, bg));
  }
  return out;
}

}  // namespace saltrk
