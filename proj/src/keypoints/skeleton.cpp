#include "wifisense/keypoints/skeleton.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "wifisense/error.hpp"

namespace wifisense::keypoints {

namespace {
constexpr std::array<std::string_view, kJoints> kNames{
    "Nose",     "Eye R",    "Eye L",   "Ear R",    "Ear L",   "Shoulder R",
    "Shoulder L", "Elbow R", "Elbow L", "Hand R",   "Hand L",  "Pelvis R",
    "Pelvis L", "Knee R",   "Knee L",  "Foot R",   "Foot L"};
}

std::string_view joint_name(std::size_t joint) {
  if (joint >= kJoints) throw ConfigError(fmt::format("joint index {} out of range", joint));
  return kNames[joint];
}

Skeleton normalize(std::span<const PixelKeypoint, kJoints> pixels, double image_w, double image_h,
                   std::size_t frame_index) {
  if (!(image_w > 0.0) || !(image_h > 0.0)) {
    throw ConfigError(fmt::format("image dimensions must be positive, got {}x{}", image_w, image_h));
  }
  Skeleton s;
  s.frame_index = frame_index;
  for (std::size_t j = 0; j < kJoints; ++j) {
    Keypoint& k = s.keypoints[j];
    if (!pixels[j].detected) continue;
    const double x = pixels[j].x / image_w;
    const double y = pixels[j].y / image_h;
    k.x = std::clamp(x, 0.0, 1.0);
    k.y = std::clamp(y, 0.0, 1.0);
    k.clamped = (k.x != x) || (k.y != y);
    k.valid = true;
  }
  return s;
}

std::array<PixelKeypoint, kJoints> denormalize(const Skeleton& skeleton, double image_w,
                                               double image_h) {
  std::array<PixelKeypoint, kJoints> out{};
  for (std::size_t j = 0; j < kJoints; ++j) {
    const Keypoint& k = skeleton.keypoints[j];
    out[j] = {k.x * image_w, k.y * image_h, k.valid};
  }
  return out;
}

double distance(const Keypoint& a, const Keypoint& b) { return std::hypot(a.x - b.x, a.y - b.y); }

}  // namespace wifisense::keypoints
