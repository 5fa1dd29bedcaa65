#include "agarsynth/cluster_graph.hpp"

#include <algorithm>
#include <queue>
#include <stdexcept>

namespace agarsynth {

void OverlapGraph::connect(std::size_t i, std::size_t j) {
  if (i == j) return;
  adj_[i * n_ + j] = adj_[j * n_ + i] = 1;
}

void OverlapGraph::disconnect(std::size_t i, std::size_t j) {
  adj_[i * n_ + j] = adj_[j * n_ + i] = 0;
}

std::vector<std::size_t> OverlapGraph::neighbours(std::size_t i) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < n_; ++j)
    if (edge(i, j)) out.push_back(j);
  return out;
}

double overlap_fraction(const BBox& a, const BBox& b) {
  const double smaller = std::min(a.area(), b.area());
  if (smaller <= 0.0) return 0.0;
  return intersection_area(a, b) / smaller;
}

OverlapGraph build_adjacency(std::span<const BBox> boxes, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw std::invalid_argument("overlap threshold must be in (0, 1)");
  }
  OverlapGraph g(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) {
    for (std::size_t j = i + 1; j < boxes.size(); ++j) {
      if (overlap_fraction(boxes[i], boxes[j]) > threshold) g.connect(i, j);
    }
  }
  return g;
}

ClusterPartition connected_components(const OverlapGraph& graph) {
  const std::size_t n = graph.size();
  std::vector<bool> seen(n, false);
  ClusterPartition groups;
  for (std::size_t start = 0; start < n; ++start) {
    if (seen[start]) continue;
    std::vector<std::size_t> group;
    std::queue<std::size_t> frontier;
    frontier.push(start);
    seen[start] = true;
    while (!frontier.empty()) {
      const std::size_t v = frontier.front();
      frontier.pop();
      group.push_back(v);
      for (std::size_t u = 0; u < n; ++u) {
        if (!seen[u] && graph.edge(v, u)) {
          seen[u] = true;
          frontier.push(u);
        }
      }
    }
    std::sort(group.begin(), group.end());
    groups.push_back(std::move(group));
  }
  return groups;
}

}  // namespace agarsynth
