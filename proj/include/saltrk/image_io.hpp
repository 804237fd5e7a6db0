#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "saltrk/common.hpp"

namespace saltrk {

// Binary or ASCII netpbm: P2/P5 gray, P3/P6 RGB, 8-bit or 16-bit maxval.
Image read_image(const std::filesystem::path& path);
// P6 for 3 channels, P5 for 1 channel; intensities clamped to [0, 1] and quantized to 8 bits.
void write_image(const Image& image, const std::filesystem::path& path);

// Max-normalized 8-bit grayscale (P5). An all-zero grid is written as all zeros.
void write_grid_pgm(const Grid& grid, const std::filesystem::path& path);
// Raw float grid as CSV: one row per line.
void write_grid_csv(const Grid& grid, const std::filesystem::path& path);
// 1-bit mask (P4); nonzero entries are written as black (1).
void write_mask_pbm(const std::vector<std::uint8_t>& mask, int width, int height, const std::filesystem::path& path);

}  // namespace saltrk
