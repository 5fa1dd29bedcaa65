#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "agarsynth/geometry.hpp"

namespace agarsynth {

/// Symmetric, irreflexive overlap relation between annotation boxes.
class OverlapGraph {
 public:
  explicit OverlapGraph(std::size_t n) : n_(n), adj_(n * n, 0) {}

  std::size_t size() const { return n_; }
  bool edge(std::size_t i, std::size_t j) const { return adj_[i * n_ + j] != 0; }
  void connect(std::size_t i, std::size_t j);
  void disconnect(std::size_t i, std::size_t j);
  std::vector<std::size_t> neighbours(std::size_t i) const;

  friend bool operator==(const OverlapGraph&, const OverlapGraph&) = default;

 private:
  std::size_t n_;
  std::vector<unsigned char> adj_;
};

/// Groups of node indices; each group ascending, groups ordered by their
/// smallest member.
using ClusterPartition = std::vector<std::vector<std::size_t>>;

/// intersection(a, b) / min(area(a), area(b)).
double overlap_fraction(const BBox& a, const BBox& b);

/// Edge (i, j) iff i != j and overlap_fraction > threshold (strict).
OverlapGraph build_adjacency(std::span<const BBox> boxes, double threshold = 0.01);

/// Connected components by breadth-first search.
ClusterPartition connected_components(const OverlapGraph& graph);

}  // namespace agarsynth
