#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "saltrk/common.hpp"

namespace saltrk {

// Intersection over union of two boxes; 0 when disjoint.
double overlap(const Box& a, const Box& b);
double center_error(const Box& a, const Box& b);

struct EvalCurve {
  std::vector<double> thresholds;
  std::vector<double> rates;
  double summary = 0.0;  // AUC for success curves, rate at 20 px for precision curves
};

// 0.00, 0.05, ..., 1.00
std::vector<double> default_overlap_thresholds();

// rate(tau) = fraction of frames with IoU > tau; summary = mean rate over the grid.
EvalCurve success_curve(std::span<const Box> pred, std::span<const Box> gt,
                        std::span<const double> thresholds = {});
// rate(e) = fraction of frames with center error <= e for e = 0..max_error px; summary = rate(20).
EvalCurve precision_curve(std::span<const Box> pred, std::span<const Box> gt, int max_error = 50);

struct SequenceScore {
  std::string name;
  double score = 0.0;
  std::vector<std::string> tags;
};

struct AttributeRow {
  std::string tag;
  double mean = 0.0;
  std::size_t count = 0;
};

struct AttributeTable {
  std::vector<AttributeRow> rows;  // sorted by tag
  double weighted_average = 0.0;   // rows weighted by their sequence counts
};

AttributeTable attribute_table(std::span<const SequenceScore> scores);

const std::vector<std::string>& known_attributes();

}  // namespace saltrk
