#include <algorithm>
#include <limits>
#include <queue>

#include "saltrk/segmentation.hpp"

namespace saltrk {

namespace {
constexpr double kResidualEps = 1e-12;
}

FlowNetwork::FlowNetwork(int nodes, int source, int sink) : source_(source), sink_(sink), head_(nodes) {
  if (nodes < 2) throw ConfigError("flow network needs at least two nodes");
  if (source == sink) throw ConfigError("source and sink must differ");
  if (source < 0 || sink < 0 || source >= nodes || sink >= nodes) throw ConfigError("terminal id out of range");
}

int FlowNetwork::add_edge(int from, int to, double capacity) {
  if (capacity < 0.0) throw ConfigError("negative edge capacity");
  if (from < 0 || to < 0 || from >= node_count() || to >= node_count()) throw ConfigError("edge endpoint out of range");
  const int id = static_cast<int>(edges_.size());
  edges_.push_back({to, capacity, 0.0});
  edges_.push_back({from, 0.0, 0.0});
  head_[from].push_back(id);
  head_[to].push_back(id + 1);
  return id;
}

struct MaxFlowSolver {
  FlowNetwork& net;
  std::vector<int> level, cursor;

  double residual(int e) const { return net.edges_[e].capacity - net.edges_[e].flow; }

  void push(int e, double f) {
    net.edges_[e].flow += f;
    net.edges_[e ^ 1].flow -= f;
  }

  bool build_levels() {
    level.assign(net.head_.size(), -1);
    std::queue<int> q;
    level[net.source_] = 0;
    q.push(net.source_);
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int e : net.head_[u]) {
        int v = net.edges_[e].to;
        if (level[v] < 0 && residual(e) > kResidualEps) {
          level[v] = level[u] + 1;
          q.push(v);
        }
      }
    }
    return level[net.sink_] >= 0;
  }

  // Iterative blocking-flow DFS along the level graph.
  double augment() {
    double total = 0.0;
    std::vector<int> path;
    while (true) {
      path.clear();
      int u = net.source_;
      while (u != net.sink_) {
        bool advanced = false;
        for (int& i = cursor[u]; i < static_cast<int>(net.head_[u].size()); ++i) {
          int e = net.head_[u][i];
          int v = net.edges_[e].to;
          if (level[v] == level[u] + 1 && residual(e) > kResidualEps) {
            path.push_back(e);
            u = v;
            advanced = true;
            break;
          }
        }
        if (!advanced) {
          if (path.empty()) return total;
          level[u] = -1;  // dead end
          int e = path.back();
          path.pop_back();
          u = net.edges_[e ^ 1].to;
          ++cursor[u];
        }
      }
      double f = std::numeric_limits<double>::infinity();
      for (int e : path) f = std::min(f, residual(e));
      for (int e : path) push(e, f);
      total += f;
    }
  }

  MaxFlowResult run() {
    MaxFlowResult result;
    while (build_levels()) {
      cursor.assign(net.head_.size(), 0);
      result.value += augment();
    }
    // Source side of the minimum cut: everything reachable in the residual graph.
    result.source_side.assign(net.head_.size(), false);
    std::queue<int> q;
    q.push(net.source_);
    result.source_side[net.source_] = true;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int e : net.head_[u]) {
        int v = net.edges_[e].to;
        if (!result.source_side[v] && residual(e) > kResidualEps) {
          result.source_side[v] = true;
          q.push(v);
        }
      }
    }
    return result;
  }
};

MaxFlowResult max_flow(FlowNetwork& net) {
  MaxFlowSolver solver{net, {}, {}};
  return solver.run();
}

}  // namespace saltrk
