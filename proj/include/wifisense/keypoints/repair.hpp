#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "wifisense/keypoints/skeleton.hpp"

namespace wifisense::keypoints {

enum class RepairReason {
  missing,       // keypoint absent in this frame
  displaced,     // moved farther than the threshold since the previous frame
  unrepairable,  // missing with too little history to extrapolate
};

std::string_view to_string(RepairReason reason);

struct RepairEvent {
  std::size_t frame = 0;  // Skeleton::frame_index
  std::size_t joint = 0;
  RepairReason reason = RepairReason::missing;
};

struct RepairConfig {
  double displacement_threshold = 0.15;  // normalized units
};

struct RepairResult {
  std::vector<Skeleton> frames;
  std::vector<RepairEvent> log;
};

// Fills missing or displaced keypoints by linear extrapolation from the two
// preceding (already repaired) frames: k_t = k_{t-1} + (k_{t-1} - k_{t-2}),
// clamped to the unit square. The first two frames pass through; their
// missing keypoints are logged as unrepairable.
RepairResult repair(std::span<const Skeleton> sequence, RepairConfig config = {});

}  // namespace wifisense::keypoints
