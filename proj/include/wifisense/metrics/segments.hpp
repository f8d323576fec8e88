#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "wifisense/keypoints/skeleton.hpp"

namespace wifisense::metrics {

struct Segment {
  std::string name;
  std::vector<std::size_t> joints;
};

// head: nose, eyes, ears; torso: shoulders; arms: elbows, hands;
// pelvis: pelvis pair; legs: knees, feet.
std::vector<Segment> default_segments();

struct SegmentError {
  std::string name;
  std::vector<double> samples;  // one per usable frame
  double mean = 0.0;
  double median = 0.0;
  double p90 = 0.0;
};

// Per frame, each segment's position is the mean of its joints in pred and in
// GT; the error is their distance over the GT torso diagonal. Frames without a
// diagonal, or with an invalid joint of the segment in either skeleton, are
// skipped for that segment. Throws ConfigError for an empty segment or an
// out-of-range joint and DataError on a length mismatch.
std::vector<SegmentError> segment_tracking_error(std::span<const keypoints::Skeleton> preds,
                                                 std::span<const keypoints::Skeleton> gts,
                                                 const std::vector<Segment>& segments);

std::string format_segment_csv(const std::vector<SegmentError>& errors);

}  // namespace wifisense::metrics
