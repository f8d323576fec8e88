#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "wifisense/keypoints/skeleton.hpp"

namespace wifisense::keypoints {

// CSV, header `frame,joint_index,x,y,valid`, one row per keypoint, frames
// ascending, joints in skeleton order. Coordinates use shortest round-trip
// decimal form.
void write_skeleton_csv(const std::filesystem::path& path, std::span<const Skeleton> frames);
std::vector<Skeleton> read_skeleton_csv(const std::filesystem::path& path);

// Binary block: "CSKS" | u16 version | u32 frame count | per frame:
// u32 frame_index, then per joint f64 x, f64 y, u8 valid. Little-endian.
void write_skeleton_bin(const std::filesystem::path& path, std::span<const Skeleton> frames);
std::vector<Skeleton> read_skeleton_bin(const std::filesystem::path& path);

// CSV `frame,label`.
void write_labels_csv(const std::filesystem::path& path, std::span<const int> labels,
                      std::size_t first_frame = 0);
std::vector<int> read_labels_csv(const std::filesystem::path& path);

}  // namespace wifisense::keypoints
