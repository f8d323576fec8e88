#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>

namespace wifisense::keypoints {

inline constexpr std::size_t kJoints = 17;

enum class Joint : std::size_t {
  nose,
  eye_r,
  eye_l,
  ear_r,
  ear_l,
  shoulder_r,
  shoulder_l,
  elbow_r,
  elbow_l,
  hand_r,
  hand_l,
  pelvis_r,
  pelvis_l,
  knee_r,
  knee_l,
  foot_r,
  foot_l,
};

constexpr std::size_t index(Joint j) { return static_cast<std::size_t>(j); }

// "Nose", "Eye R", ... in skeleton order.
std::string_view joint_name(std::size_t joint);

// Normalized image coordinates; valid keypoints lie in [0,1]^2.
struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  bool valid = false;
  bool clamped = false;  // was outside the frame and clamped onto its border
};

struct Skeleton {
  std::array<Keypoint, kJoints> keypoints{};
  std::size_t frame_index = 0;

  Keypoint& operator[](Joint j) { return keypoints[index(j)]; }
  const Keypoint& operator[](Joint j) const { return keypoints[index(j)]; }
};

struct PixelKeypoint {
  double x = 0.0;
  double y = 0.0;
  bool detected = true;
};

// Divides by the image size. Out-of-frame points are clamped and flagged;
// undetected points become invalid. Throws ConfigError for a zero dimension.
Skeleton normalize(std::span<const PixelKeypoint, kJoints> pixels, double image_w, double image_h,
                   std::size_t frame_index = 0);

std::array<PixelKeypoint, kJoints> denormalize(const Skeleton& skeleton, double image_w,
                                               double image_h);

double distance(const Keypoint& a, const Keypoint& b);

}  // namespace wifisense::keypoints
