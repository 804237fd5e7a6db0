#pragma once

#include <span>
#include <vector>

#include "saltrk/common.hpp"

// Dense per-pixel kernels. Each has a straight serial version, kept as the
// reference the tests compare against, and an OpenMP version used by the tracker.
namespace saltrk::kernels {

enum class Backend { Serial, Parallel };
enum class Boundary { Clip, Wrap };

// Caps OpenMP threads; 0 restores the runtime default.
void set_thread_limit(int threads);
int thread_limit();
// Threads a parallel region will use under the current limit.
int active_threads();

// out(x, y) = sum_{u,v} filter(u, v) * map(x - fw/2 + u, y - fh/2 + v), zero outside the map.
Grid correlate_serial(const Grid& map, const Grid& filter);
Grid correlate_parallel(const Grid& map, const Grid& filter);
Grid correlate(const Grid& map, const Grid& filter, Backend backend = Backend::Parallel);

// Normalized 1-D Gaussian taps for the given variance, truncated at 3 sigma. Variance <= 0 gives {1}.
std::vector<double> gaussian_taps(double variance);

// Separable Gaussian smoothing with independent per-axis variances.
Grid smooth_serial(const Grid& in, double var_x, double var_y, Boundary boundary);
Grid smooth_parallel(const Grid& in, double var_x, double var_y, Boundary boundary);
Grid smooth(const Grid& in, double var_x, double var_y, Boundary boundary, Backend backend = Backend::Parallel);

// Pixelwise max of |grid| over a list of equally sized grids; empty list gives an all-zero grid.
Grid max_abs_serial(std::span<const Grid> grids, int width, int height);
Grid max_abs_parallel(std::span<const Grid> grids, int width, int height);
Grid max_abs(std::span<const Grid> grids, int width, int height, Backend backend = Backend::Parallel);

}  // namespace saltrk::kernels
