#include "saltrk/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

namespace saltrk {

namespace {

// Next header token, skipping whitespace and '#' comments.
int read_header_int(std::istream& in, const std::filesystem::path& path) {
  while (true) {
    int c = in.peek();
    if (c == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (std::isspace(c)) {
      in.get();
    } else {
      break;
    }
  }
  int v = 0;
  if (!(in >> v)) throw InputError("malformed netpbm header in " + path.string());
  return v;
}

}  // namespace

Image read_image(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open image " + path.string());
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || (magic[1] != '2' && magic[1] != '3' && magic[1] != '5' && magic[1] != '6'))
    throw InputError("unsupported image format (expected PGM/PPM): " + path.string());
  const bool ascii = magic[1] == '2' || magic[1] == '3';
  const int channels = (magic[1] == '3' || magic[1] == '6') ? 3 : 1;
  const int w = read_header_int(in, path), h = read_header_int(in, path), maxval = read_header_int(in, path);
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) throw InputError("bad netpbm dimensions in " + path.string());
  Image img(w, h, channels);
  auto& v = img.values();
  if (ascii) {
    for (double& x : v) {
      int s;
      if (!(in >> s)) throw InputError("truncated image " + path.string());
      x = static_cast<double>(s) / maxval;
    }
    return img;
  }
  in.get();  // single whitespace after maxval
  const std::size_t bps = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raw(v.size() * bps);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) throw InputError("truncated image " + path.string());
  for (std::size_t i = 0; i < v.size(); ++i) {
    int s = bps == 1 ? raw[i] : (raw[2 * i] << 8) | raw[2 * i + 1];
    v[i] = static_cast<double>(s) / maxval;
  }
  return img;
}

void write_image(const Image& image, const std::filesystem::path& path) {
  if (image.channels() != 1 && image.channels() != 3) throw InputError("can only write 1- or 3-channel images");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << (image.channels() == 3 ? "P6" : "P5") << "\n" << image.width() << " " << image.height() << "\n255\n";
  std::vector<unsigned char> raw(image.values().size());
  for (std::size_t i = 0; i < raw.size(); ++i)
    raw[i] = static_cast<unsigned char>(std::lround(std::clamp(image.values()[i], 0.0, 1.0) * 255.0));
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

void write_grid_pgm(const Grid& grid, const std::filesystem::path& path) {
  Image img(grid.width(), grid.height(), 1);
  const double peak = grid.max();
  if (peak > 0.0)
    for (std::size_t i = 0; i < grid.size(); ++i) img.values()[i] = std::max(0.0, grid.values()[i]) / peak;
  write_image(img, path);
}

void write_grid_csv(const Grid& grid, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << std::setprecision(17);
  for (int y = 0; y < grid.height(); ++y) {
    for (int x = 0; x < grid.width(); ++x) out << (x ? "," : "") << grid(x, y);
    out << "\n";
  }
}

void write_mask_pbm(const std::vector<std::uint8_t>& mask, int width, int height, const std::filesystem::path& path) {
  if (mask.size() != static_cast<std::size_t>(width) * height) throw InputError("mask size mismatch");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << "P4\n" << width << " " << height << "\n";
  const int row_bytes = (width + 7) / 8;
  std::vector<unsigned char> row(row_bytes);
  for (int y = 0; y < height; ++y) {
    std::fill(row.begin(), row.end(), 0);
    for (int x = 0; x < width; ++x)
      if (mask[static_cast<std::size_t>(y) * width + x]) row[x / 8] |= static_cast<unsigned char>(0x80 >> (x % 8));
    out.write(reinterpret_cast<const char*>(row.data()), row_bytes);
  }
}

}  // namespace saltrk
