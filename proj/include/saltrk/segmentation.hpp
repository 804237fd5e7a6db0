#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "saltrk/common.hpp"
#include "saltrk/saliency.hpp"

namespace saltrk {

enum class TrimapLabel : std::uint8_t { Unknown = 0, Foreground = 1, Background = 2 };

struct Trimap {
  int width = 0, height = 0;
  std::vector<TrimapLabel> labels;

  Trimap() = default;
  Trimap(int w, int h) : width(w), height(h), labels(static_cast<std::size_t>(w) * h, TrimapLabel::Unknown) {}
  TrimapLabel& at(int x, int y) { return labels[static_cast<std::size_t>(y) * width + x]; }
  TrimapLabel at(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t count(TrimapLabel l) const;
  // Needs at least one seed of each kind.
  bool solvable() const { return count(TrimapLabel::Foreground) > 0 && count(TrimapLabel::Background) > 0; }
};

// FG seeds: inside the box with saliency >= fg_fraction * max. BG seeds: the ring of width
// bg_margin around the box. Everything else, including weak in-box pixels, stays unknown.
Trimap seeds_from_saliency(const SaliencyMap& saliency, const TargetState& box, double fg_fraction = 0.7,
                           int bg_margin = 50);

class FlowNetwork {
 public:
  FlowNetwork(int nodes, int source, int sink);

  int node_count() const { return static_cast<int>(head_.size()); }
  int source() const { return source_; }
  int sink() const { return sink_; }
  // Returns the edge id; the reverse residual edge is id ^ 1.
  int add_edge(int from, int to, double capacity);

  struct Edge {
    int to;
    double capacity;
    double flow;
  };
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<std::vector<int>>& adjacency() const { return head_; }

  friend struct MaxFlowSolver;

 private:
  int source_, sink_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> head_;
};

struct MaxFlowResult {
  double value = 0.0;
  std::vector<bool> source_side;  // min-cut labeling
};

// Dinic's algorithm. The network keeps the final flow on its edges.
MaxFlowResult max_flow(FlowNetwork& net);

struct GrabCutParams {
  int components = 5;
  double gamma = 50.0;
  double variance_floor = 1e-4;
};

struct GrabCutResult {
  std::vector<std::uint8_t> mask;  // 1 = foreground
  std::vector<double> energies;    // energy after every cut, first entry is the seed-only cut
};

GrabCutResult grabcut(const Image& image, const Trimap& trimap, int iterations = 5, const GrabCutParams& params = {});

}  // namespace saltrk
