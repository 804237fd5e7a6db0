#include "saltrk/localization.hpp"

#include <algorithm>
#include <cmath>

namespace saltrk {

PosteriorGrid PosteriorGrid::delta(int width, int height, Point at) {
  PosteriorGrid p{Grid(width, height)};
  if (!p.mass.contains(at.x, at.y)) throw InputError("delta posterior outside the frame");
  p.mass(at.x, at.y) = 1.0;
  return p;
}

PosteriorGrid PosteriorGrid::uniform(int width, int height) {
  const double v = 1.0 / (static_cast<double>(width) * height);
  return {Grid(width, height, v)};
}

GenerativeFilter::GenerativeFilter(int width, int height, std::size_t memory)
    : width_(width), height_(height), memory_(memory), values_(width, height) {
  if (memory < 1) throw ConfigError("filter memory must be at least 1");
  if (width < 1 || height < 1) throw ConfigError("filter must be at least 1x1");
}

void GenerativeFilter::push(Grid crop) {
  if (crop.width() != width_ || crop.height() != height_) throw ConfigError("filter crop size mismatch");
  history_.push_back(std::move(crop));
  if (history_.size() > memory_) history_.pop_front();
  // Recomputed from the buffer rather than updated in place, so it is always the exact mean.
  values_ = Grid(width_, height_);
  auto& dst = values_.values();
  for (const auto& h : history_)
    for (std::size_t p = 0; p < dst.size(); ++p) dst[p] += h.values()[p];
  const double inv = 1.0 / static_cast<double>(history_.size());
  for (double& v : dst) v *= inv;
}

TransitionEstimate estimate_transition(std::span<const Point> centers, const TargetState& prev, double sigma_min) {
  if (centers.empty()) throw ContractError("estimate_transition needs at least one positive sample");
  TransitionEstimate t;
  const double n = static_cast<double>(centers.size());
  for (const auto& c : centers) {
    t.mean_x += c.x;
    t.mean_y += c.y;
  }
  t.mean_x /= n;
  t.mean_y /= n;
  t.dx = t.mean_x - prev.cx;
  t.dy = t.mean_y - prev.cy;
  const double floor = sigma_min * sigma_min;
  if (centers.size() == 1) {
    t.cov_xx = t.cov_yy = floor;
    return t;
  }
  double sxx = 0, syy = 0;
  for (const auto& c : centers) {
    sxx += (c.x - t.mean_x) * (c.x - t.mean_x);
    syy += (c.y - t.mean_y) * (c.y - t.mean_y);
  }
  t.cov_xx = std::max(sxx / (n - 1.0), floor);
  t.cov_yy = std::max(syy / (n - 1.0), floor);
  return t;
}

PosteriorGrid predict_prior(const PosteriorGrid& posterior, const TransitionEstimate& t, kernels::Boundary boundary,
                            kernels::Backend backend) {
  const Grid& src = posterior.mass;
  const int w = src.width(), h = src.height();
  const int sx = static_cast<int>(std::lround(t.dx)), sy = static_cast<int>(std::lround(t.dy));
  Grid shifted(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double m = src(x, y);
      if (m == 0.0) continue;
      int nx = x + sx, ny = y + sy;
      if (boundary == kernels::Boundary::Wrap) {
        nx = ((nx % w) + w) % w;
        ny = ((ny % h) + h) % h;
      } else if (!shifted.contains(nx, ny)) {
        continue;
      }
      shifted(nx, ny) += m;
    }
  }
  PosteriorGrid prior{kernels::smooth(shifted, t.cov_xx, t.cov_yy, boundary, backend)};
  const double total = prior.mass.sum();
  if (!(total > 0.0)) return PosteriorGrid::uniform(w, h);
  for (double& v : prior.mass.values()) v /= total;
  return prior;
}

Grid crop_map(const Grid& map, const TargetState& s) {
  Grid crop(s.w, s.h);
  const int ox = s.left(), oy = s.top();
  for (int v = 0; v < s.h; ++v)
    for (int u = 0; u < s.w; ++u)
      if (map.contains(ox + u, oy + v)) crop(u, v) = map(ox + u, oy + v);
  return crop;
}

void update_filter(GenerativeFilter& filter, const SaliencyMap& saliency, const TargetState& state) {
  if (filter.width() == 0) filter = GenerativeFilter(state.w, state.h, filter.memory());
  filter.push(crop_map(saliency.values, state));
}

Grid likelihood_map(const GenerativeFilter& filter, const SaliencyMap& saliency, double floor,
                    kernels::Backend backend) {
  const Grid& m = saliency.values;
  if (filter.width() > m.width() || filter.height() > m.height())
    throw ConfigError("generative filter larger than the frame");
  Grid lik = filter.empty() ? Grid(m.width(), m.height()) : kernels::correlate(m, filter.values(), backend);
  auto& v = lik.values();
  const double lo = *std::min_element(v.begin(), v.end());
  const double shift = lo < 0.0 ? -lo : 0.0;
  double total = 0.0;
  for (double& x : v) total += (x = x + shift + floor);
  for (double& x : v) x /= total;
  return lik;
}

Point argmax(const Grid& g) {
  Point best{0, 0};
  double bv = -1.0;
  for (int y = 0; y < g.height(); ++y)
    for (int x = 0; x < g.width(); ++x)
      if (g(x, y) > bv) {
        bv = g(x, y);
        best = {x, y};
      }
  return best;
}

PosteriorUpdate posterior_and_map(const PosteriorGrid& prior, const Grid& likelihood, int box_w, int box_h) {
  if (!prior.mass.same_shape(likelihood)) throw ConfigError("prior and likelihood grids differ in size");
  PosteriorUpdate out;
  auto constant = [](const Grid& g) {
    const auto& v = g.values();
    return std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); });
  };
  auto finish = [&]() {
    Point c = argmax(out.posterior.mass);
    out.state = TargetState{c.x, c.y, box_w, box_h};
    out.map_probability = out.posterior.mass(c.x, c.y);
    return out;
  };
  // A constant factor cancels in the normalization; skip the arithmetic so the identity is exact.
  if (constant(likelihood) && likelihood.values().front() > 0.0) {
    out.posterior = prior;
    return finish();
  }
  if (constant(prior.mass) && prior.mass.values().front() > 0.0) {
    out.posterior.mass = likelihood;
    const double total = likelihood.sum();
    if (!(total > 0.0)) throw StateError("posterior vanished: likelihood is identically zero");
    if (total != 1.0)
      for (double& v : out.posterior.mass.values()) v /= total;
    return finish();
  }
  out.posterior.mass = Grid(likelihood.width(), likelihood.height());
  auto& dst = out.posterior.mass.values();
  double total = 0.0;
  for (std::size_t p = 0; p < dst.size(); ++p) total += (dst[p] = prior.mass.values()[p] * likelihood.values()[p]);
  if (!(total > 0.0)) throw StateError("posterior vanished: prior and likelihood have disjoint support");
  for (double& v : dst) v /= total;
  return finish();
}

}  // namespace saltrk
