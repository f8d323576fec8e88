#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "wifisense/keypoints/skeleton.hpp"

namespace wifisense::dgnn {

inline constexpr std::size_t kVertices = keypoints::kJoints;
inline constexpr std::size_t kEdges = 16;

struct DirectedEdge {
  std::size_t source;
  std::size_t target;
};

// Skeleton tree rooted at the nose, edges directed away from the root.
struct DirectedSkeletonGraph {
  std::array<DirectedEdge, kEdges> edges;
  std::size_t root = 0;

  // V x E row-major 0/1 matrices marking each edge's source / target vertex.
  std::vector<double> source_incidence() const;
  std::vector<double> target_incidence() const;
};

const DirectedSkeletonGraph& build_graph();

// True when every vertex is reached exactly once from the root by following
// edges, i.e. the edges form a spanning arborescence.
bool is_rooted_spanning_tree(const DirectedSkeletonGraph& graph);

}  // namespace wifisense::dgnn
