#include "saltrk/kernels.hpp"

#include <cmath>
#include <omp.h>

namespace saltrk::kernels {

namespace {

int g_thread_limit = 0;

int threads() { return g_thread_limit > 0 ? g_thread_limit : omp_get_max_threads(); }

inline double correlate_at(const Grid& map, const Grid& filter, int x, int y) {
  const int fw = filter.width(), fh = filter.height();
  const int ox = x - fw / 2, oy = y - fh / 2;
  double acc = 0.0;
  for (int v = 0; v < fh; ++v) {
    int my = oy + v;
    if (my < 0 || my >= map.height()) continue;
    for (int u = 0; u < fw; ++u) {
      int mx = ox + u;
      if (mx < 0 || mx >= map.width()) continue;
      acc += filter(u, v) * map(mx, my);
    }
  }
  return acc;
}

inline int wrap(int i, int n) {
  int r = i % n;
  return r < 0 ? r + n : r;
}

// One separable pass along x (axis 0) or y (axis 1) for a single output row/column index.
void smooth_row(const Grid& in, Grid& out, const std::vector<double>& taps, int y, Boundary b) {
  const int r = static_cast<int>(taps.size()) / 2, w = in.width();
  for (int x = 0; x < w; ++x) {
    double acc = 0.0;
    for (int k = -r; k <= r; ++k) {
      int sx = x - k;
      if (b == Boundary::Wrap) sx = wrap(sx, w);
      else if (sx < 0 || sx >= w) continue;
      acc += taps[k + r] * in(sx, y);
    }
    out(x, y) = acc;
  }
}

void smooth_col(const Grid& in, Grid& out, const std::vector<double>& taps, int x, Boundary b) {
  const int r = static_cast<int>(taps.size()) / 2, h = in.height();
  for (int y = 0; y < h; ++y) {
    double acc = 0.0;
    for (int k = -r; k <= r; ++k) {
      int sy = y - k;
      if (b == Boundary::Wrap) sy = wrap(sy, h);
      else if (sy < 0 || sy >= h) continue;
      acc += taps[k + r] * in(x, sy);
    }
    out(x, y) = acc;
  }
}

void check_grids(std::span<const Grid> grids, int width, int height) {
  for (const auto& g : grids)
    if (g.width() != width || g.height() != height) throw ConfigError("max_abs: grid size mismatch");
}

}  // namespace

void set_thread_limit(int n) { g_thread_limit = n < 0 ? 0 : n; }
int thread_limit() { return g_thread_limit; }
int active_threads() { return threads(); }

Grid correlate_serial(const Grid& map, const Grid& filter) {
  Grid out(map.width(), map.height());
  for (int y = 0; y < map.height(); ++y)
    for (int x = 0; x < map.width(); ++x) out(x, y) = correlate_at(map, filter, x, y);
  return out;
}

Grid correlate_parallel(const Grid& map, const Grid& filter) {
  Grid out(map.width(), map.height());
  const int h = map.height(), w = map.width();
#pragma omp parallel for schedule(static) num_threads(threads())
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out(x, y) = correlate_at(map, filter, x, y);
  return out;
}

Grid correlate(const Grid& map, const Grid& filter, Backend backend) {
  return backend == Backend::Serial ? correlate_serial(map, filter) : correlate_parallel(map, filter);
}

std::vector<double> gaussian_taps(double variance) {
  if (!(variance > 0.0)) return {1.0};
  const double sigma = std::sqrt(variance);
  const int r = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) sum += taps[i + r] = std::exp(-0.5 * i * i / variance);
  for (double& t : taps) t /= sum;
  return taps;
}

Grid smooth_serial(const Grid& in, double var_x, double var_y, Boundary boundary) {
  const auto tx = gaussian_taps(var_x), ty = gaussian_taps(var_y);
  Grid tmp(in.width(), in.height()), out(in.width(), in.height());
  for (int y = 0; y < in.height(); ++y) smooth_row(in, tmp, tx, y, boundary);
  for (int x = 0; x < in.width(); ++x) smooth_col(tmp, out, ty, x, boundary);
  return out;
}

Grid smooth_parallel(const Grid& in, double var_x, double var_y, Boundary boundary) {
  const auto tx = gaussian_taps(var_x), ty = gaussian_taps(var_y);
  Grid tmp(in.width(), in.height()), out(in.width(), in.height());
  const int h = in.height(), w = in.width();
#pragma omp parallel num_threads(threads())
  {
#pragma omp for schedule(static)
    for (int y = 0; y < h; ++y) smooth_row(in, tmp, tx, y, boundary);
#pragma omp for schedule(static)
    for (int x = 0; x < w; ++x) smooth_col(tmp, out, ty, x, boundary);
  }
  return out;
}

Grid smooth(const Grid& in, double var_x, double var_y, Boundary boundary, Backend backend) {
  return backend == Backend::Serial ? smooth_serial(in, var_x, var_y, boundary)
                                    : smooth_parallel(in, var_x, var_y, boundary);
}

Grid max_abs_serial(std::span<const Grid> grids, int width, int height) {
  check_grids(grids, width, height);
  Grid out(width, height);
  auto& dst = out.values();
  for (const auto& g : grids) {
    const auto& src = g.values();
    for (std::size_t p = 0; p < dst.size(); ++p) dst[p] = std::max(dst[p], std::abs(src[p]));
  }
  return out;
}

Grid max_abs_parallel(std::span<const Grid> grids, int width, int height) {
  check_grids(grids, width, height);
  Grid out(width, height);
  auto& dst = out.values();
  const auto n = static_cast<std::ptrdiff_t>(dst.size());
#pragma omp parallel for schedule(static) num_threads(threads())
  for (std::ptrdiff_t p = 0; p < n; ++p) {
    double m = 0.0;
    for (const auto& g : grids) m = std::max(m, std::abs(g.values()[p]));
    dst[p] = m;
  }
  return out;
}

Grid max_abs(std::span<const Grid> grids, int width, int height, Backend backend) {
  return backend == Backend::Serial ? max_abs_serial(grids, width, height) : max_abs_parallel(grids, width, height);
}

}  // namespace saltrk::kernels
