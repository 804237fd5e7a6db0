#include "saltrk/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace saltrk {

double overlap(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;
}

double center_error(const Box& a, const Box& b) {
  return std::hypot(a.center_x() - b.center_x(), a.center_y() - b.center_y());
}

std::vector<double> default_overlap_thresholds() {
  std::vector<double> t(21);
  for (int i = 0; i <= 20; ++i) t[i] = i / 20.0;
  return t;
}

namespace {

void check_lengths(std::span<const Box> pred, std::span<const Box> gt) {
  if (pred.size() != gt.size())
    throw InputError("prediction/ground-truth length mismatch: " + std::to_string(pred.size()) + " vs " +
                     std::to_string(gt.size()));
  if (pred.empty()) throw InputError("no frames to evaluate");
}

}  // namespace

EvalCurve success_curve(std::span<const Box> pred, std::span<const Box> gt, std::span<const double> thresholds) {
  check_lengths(pred, gt);
  EvalCurve c;
  c.thresholds = thresholds.empty() ? default_overlap_thresholds()
                                    : std::vector<double>(thresholds.begin(), thresholds.end());
  std::vector<double> ious(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) ious[i] = overlap(pred[i], gt[i]);
  for (double tau : c.thresholds) {
    auto hits = std::count_if(ious.begin(), ious.end(), [tau](double v) { return v > tau; });
    c.rates.push_back(static_cast<double>(hits) / static_cast<double>(ious.size()));
  }
  double s = 0.0;
  for (double r : c.rates) s += r;
  c.summary = s / static_cast<double>(c.rates.size());
  return c;
}

EvalCurve precision_curve(std::span<const Box> pred, std::span<const Box> gt, int max_error) {
  check_lengths(pred, gt);
  if (max_error < 0) throw InputError("max_error must be >= 0");
  EvalCurve c;
  std::vector<double> err(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) err[i] = center_error(pred[i], gt[i]);
  for (int e = 0; e <= max_error; ++e) {
    auto hits = std::count_if(err.begin(), err.end(), [e](double v) { return v <= e; });
    c.thresholds.push_back(e);
    c.rates.push_back(static_cast<double>(hits) / static_cast<double>(err.size()));
  }
  c.summary = max_error >= 20 ? c.rates[20] : c.rates.back();
  return c;
}

const std::vector<std::string>& known_attributes() {
  static const std::vector<std::string> tags{"IV", "OPR", "SV", "OCC", "DEF", "MB", "FM", "IPR", "OV", "BC", "LR"};
  return tags;
}

AttributeTable attribute_table(std::span<const SequenceScore> scores) {
  std::map<std::string, std::pair<double, std::size_t>> acc;
  for (const auto& s : scores) {
    std::vector<std::string> tags = s.tags;
    std::sort(tags.begin(), tags.end());
    tags.erase(std::unique(tags.begin(), tags.end()), tags.end());
    for (const auto& t : tags) {
      acc[t].first += s.score;
      acc[t].second += 1;
    }
  }
  AttributeTable table;
  double num = 0.0;
  std::size_t den = 0;
  for (const auto& [tag, sc] : acc) {
    AttributeRow row{tag, sc.first / static_cast<double>(sc.second), sc.second};
    num += row.mean * static_cast<double>(row.count);
    den += row.count;
    table.rows.push_back(row);
  }
  table.weighted_average = den ? num / static_cast<double>(den) : 0.0;
  return table;
}

}  // namespace saltrk
