#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wifisense/keypoints/skeleton.hpp"

namespace wifisense::metrics {

using keypoints::kJoints;
using keypoints::Skeleton;

struct PckConfig {
  std::vector<double> alphas{0.10, 0.20, 0.30, 0.40, 0.50};
};

// Shoulder L to Pelvis R of the ground truth, or Shoulder R to Pelvis L when
// an endpoint of the first is invalid. nullopt when neither diagonal has two
// valid endpoints or the chosen one has zero length.
std::optional<double> torso_diagonal(const Skeleton& gt);

struct PckReport {
  std::vector<double> alphas;
  // percent[k][a]: share of counted frames whose joint k lies within alphas[a]
  // torso diagonals of the ground truth. NaN when the joint has no counted frame.
  std::array<std::vector<double>, kJoints> percent;
  std::vector<double> avg;  // mean over joints with at least one counted frame
  std::array<std::size_t, kJoints> counted{};  // frames with a valid GT joint
  std::size_t frames = 0;
  std::vector<std::size_t> excluded_frames;  // frame indices without a usable diagonal
};

// Joint k of a frame counts when the frame has a usable diagonal and the GT
// keypoint is valid; an invalid prediction is then a miss. d <= alpha is correct.
// Throws DataError on a length mismatch and ConfigError unless 0 < alpha <= 1.
PckReport pck(std::span<const Skeleton> preds, std::span<const Skeleton> gts,
              const PckConfig& config = {});

// Mean over joints per alpha, skipping NaN (joints without counted frames).
std::vector<double> joint_average(const std::array<std::vector<double>, kJoints>& percent,
                                  std::size_t alphas);

// Non-decreasing in alpha for every joint and the average.
bool is_monotone(const PckReport& report);

// Aligned text table: one row per joint, an AVG row, one column per alpha.
std::string format_pck_table(const PckReport& report);
// CSV `keypoint,PCK10,...` with the same rows.
std::string format_pck_csv(const PckReport& report);

// Two-column-per-alpha table of non-fall (X) and fall (O) frames.
std::string format_fall_split_table(const PckReport& non_fall, const PckReport& fall);
std::string format_fall_split_csv(const PckReport& non_fall, const PckReport& fall);

}  // namespace wifisense::metrics
