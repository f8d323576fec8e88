#include "wifisense/keypoints/repair.hpp"

#include <algorithm>

namespace wifisense::keypoints {

std::string_view to_string(RepairReason reason) {
  switch (reason) {
    case RepairReason::missing:
      return "missing";
    case RepairReason::displaced:
      return "displaced";
    case RepairReason::unrepairable:
      return "unrepairable";
  }
  return "unknown";
}

RepairResult repair(std::span<const Skeleton> sequence, RepairConfig config) {
  RepairResult result;
  result.frames.assign(sequence.begin(), sequence.end());
  auto& out = result.frames;
  for (std::size_t t = 0; t < out.size(); ++t) {
    for (std::size_t j = 0; j < kJoints; ++j) {
      Keypoint& k = out[t].keypoints[j];
      if (t < 2) {
        if (!k.valid) result.log.push_back({out[t].frame_index, j, RepairReason::unrepairable});
        continue;
      }
      const Keypoint& prev = out[t - 1].keypoints[j];
      const Keypoint& prev2 = out[t - 2].keypoints[j];
      RepairReason reason;
      if (!k.valid) {
        reason = RepairReason::missing;
      } else if (prev.valid && distance(k, prev) > config.displacement_threshold) {
        reason = RepairReason::displaced;
      } else {
        continue;
      }
      if (prev.valid && prev2.valid) {
        k.x = std::clamp(2.0 * prev.x - prev2.x, 0.0, 1.0);
        k.y = std::clamp(2.0 * prev.y - prev2.y, 0.0, 1.0);
      } else if (prev.valid) {
        k.x = prev.x;
        k.y = prev.y;
      } else {
        result.log.push_back({out[t].frame_index, j, RepairReason::unrepairable});
        continue;
      }
      k.valid = true;
      k.clamped = false;
      result.log.push_back({out[t].frame_index, j, reason});
    }
  }
  return result;
}

}  // namespace wifisense::keypoints
