#include "saltrk/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iterator>
#include <sstream>

namespace saltrk {

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  if (!f) throw InputError("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

bool is_frame_file(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".ppm" || ext == ".pgm" || ext == ".pnm";
}

}  // namespace

Box parse_box(const std::string& line) {
  std::string s = line;
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == '\t' || c == ';'; }, ' ');
  std::istringstream in(s);
  Box b;
  if (!(in >> b.x >> b.y >> b.w >> b.h)) throw InputError("cannot parse box '" + line + "'");
  if (!(b.w > 0 && b.h > 0)) throw InputError("box must be positive-sized: '" + line + "'");
  return b;
}

std::vector<Box> parse_ground_truth(const std::string& text) {
  std::vector<Box> boxes;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    boxes.push_back(parse_box(line));
  }
  return boxes;
}

std::vector<std::string> parse_tags(const std::string& text) {
  std::string s = text;
  std::replace_if(s.begin(), s.end(), [](char c) { return c == ',' || c == ';' || c == '\t' || c == '\n' || c == '\r'; }, ' ');
  std::istringstream in(s);
  std::vector<std::string> tags;
  for (std::string t; in >> t;) tags.push_back(t);
  return tags;
}

SequenceDataset load_sequence(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw InputError("sequence directory not found: " + dir.string());
  SequenceDataset ds;
  ds.name = dir.filename().string();
  if (ds.name.empty()) ds.name = dir.parent_path().filename().string();
  const fs::path img = dir / kFrameDir;
  if (!fs::is_directory(img)) throw InputError("missing frame folder " + img.string());
  for (const auto& e : fs::directory_iterator(img))
    if (e.is_regular_file() && is_frame_file(e.path())) ds.frames.push_back(e.path());
  std::sort(ds.frames.begin(), ds.frames.end());
  ds.ground_truth = parse_ground_truth(slurp(dir / kGroundTruthFile));
  if (ds.frames.size() != ds.ground_truth.size())
    throw InputError("frames=" + std::to_string(ds.frames.size()) + " gt=" + std::to_string(ds.ground_truth.size()));
  if (fs::exists(dir / kAttributeFile)) ds.tags = parse_tags(slurp(dir / kAttributeFile));
  return ds;
}

void write_results_csv(const fs::path& path, std::span<const Box> boxes) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << std::setprecision(10);
  for (std::size_t i = 0; i < boxes.size(); ++i)
    out << i + 1 << "," << boxes[i].x << "," << boxes[i].y << "," << boxes[i].w << "," << boxes[i].h << "\n";
}

std::vector<Box> read_results_csv(const fs::path& path) {
  std::istringstream in(slurp(path));
  std::vector<Box> boxes;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    std::string s = line;
    std::replace(s.begin(), s.end(), ',', ' ');
    std::istringstream ls(s);
    double idx;
    Box b;
    if (!(ls >> idx >> b.x >> b.y >> b.w >> b.h)) throw InputError("cannot parse result line '" + line + "'");
    boxes.push_back(b);
  }
  return boxes;
}

void write_curve_csv(const fs::path& path, const EvalCurve& curve) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << "threshold,rate\n" << std::setprecision(10);
  for (std::size_t i = 0; i < curve.thresholds.size(); ++i) out << curve.thresholds[i] << "," << curve.rates[i] << "\n";
}

ClutterLevel parse_clutter(const std::string& s) {
  if (s == "none") return ClutterLevel::None;
  if (s == "low") return ClutterLevel::Low;
  if (s == "medium") return ClutterLevel::Medium;
  if (s == "high") return ClutterLevel::High;
  throw InputError("unknown clutter level '" + s + "' (none|low|medium|high)");
}

}  // namespace saltrk
