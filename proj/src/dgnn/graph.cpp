#include "wifisense/dgnn/graph.hpp"

namespace wifisense::dgnn {

using keypoints::index;
using J = keypoints::Joint;

const DirectedSkeletonGraph& build_graph() {
  static const DirectedSkeletonGraph graph{
      {{
          {index(J::nose), index(J::eye_r)},
          {index(J::nose), index(J::eye_l)},
          {index(J::eye_r), index(J::ear_r)},
          {index(J::eye_l), index(J::ear_l)},
          {index(J::nose), index(J::shoulder_r)},
          {index(J::nose), index(J::shoulder_l)},
          {index(J::shoulder_r), index(J::elbow_r)},
          {index(J::elbow_r), index(J::hand_r)},
          {index(J::shoulder_l), index(J::elbow_l)},
          {index(J::elbow_l), index(J::hand_l)},
          {index(J::shoulder_r), index(J::pelvis_r)},
          {index(J::shoulder_l), index(J::pelvis_l)},
          {index(J::pelvis_r), index(J::knee_r)},
          {index(J::knee_r), index(J::foot_r)},
          {index(J::pelvis_l), index(J::knee_l)},
          {index(J::knee_l), index(J::foot_l)},
      }},
      index(J::nose),
  };
  return graph;
}

std::vector<double> DirectedSkeletonGraph::source_incidence() const {
  std::vector<double> m(kVertices * kEdges, 0.0);
  for (std::size_t e = 0; e < kEdges; ++e) m[edges[e].source * kEdges + e] = 1.0;
  return m;
}

std::vector<double> DirectedSkeletonGraph::target_incidence() const {
  std::vector<double> m(kVertices * kEdges, 0.0);
  for (std::size_t e = 0; e < kEdges; ++e) m[edges[e].target * kEdges + e] = 1.0;
  return m;
}

bool is_rooted_spanning_tree(const DirectedSkeletonGraph& graph) {
  std::array<int, kVertices> visits{};
  std::vector<std::size_t> stack{graph.root};
  visits[graph.root] = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    for (const auto& e : graph.edges) {
      if (e.source >= kVertices || e.target >= kVertices) return false;
      if (e.source != v) continue;
      if (++visits[e.target] > 1) return false;
      stack.push_back(e.target);
    }
  }
  for (int v : visits)
    if (v != 1) return false;
  return true;
}

}  // namespace wifisense::dgnn
