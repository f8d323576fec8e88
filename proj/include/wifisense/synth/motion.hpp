#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "wifisense/keypoints/skeleton.hpp"

namespace wifisense::synth {

inline constexpr double kFrameRate = 30.0;

enum class Action { stand, walk, squat, fall_backward, fall_sideways };

std::string_view to_string(Action action);
// Throws ConfigError for an unknown name.
Action parse_action(std::string_view name);
bool is_fall(Action action);
// 0 stand, 1 walk, 2 squat; falls use the class of their lead-in action.
int lead_in_label(Action action);

struct MotionScript {
  Action action = Action::stand;
  double duration_s = 30.0;  // fall scripts: lead-in plus fall
  double pre_fall_s = 5.0;   // fall scripts only
  double start_x = 0.5;      // horizontal position of the body center
  std::uint64_t seed = 0;
};

struct Motion {
  std::vector<keypoints::Skeleton> frames;  // 30 Hz, frame_index from 0
  std::vector<int> labels;                  // one per frame, 4-class
};

// Throws ConfigError for a non-positive duration or a fall script whose
// lead-in does not fit in the duration.
Motion generate_motion(const MotionScript& script);

std::size_t frame_count(double seconds);

}  // namespace wifisense::synth
