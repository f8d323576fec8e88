#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "wifisense/csi/sync.hpp"
#include "wifisense/csi/window.hpp"
#include "wifisense/dgnn/dgnn.hpp"
#include "wifisense/keypoints/repair.hpp"
#include "wifisense/synth/dataset.hpp"
#include "wifisense/tednet/tednet.hpp"
#include "wifisense/tednet/train.hpp"

namespace wifisense::pipeline {

// Every session of one split, in manifest order.
std::vector<synth::Session> load_split(const std::filesystem::path& root, const std::string& split);

// Synchronizes a session's records and cuts them into windows.
std::vector<csi::CsiWindow> session_windows(const synth::Session& session,
                                            const csi::SyncPolicy& policy,
                                            const csi::WindowConfig& window,
                                            csi::SyncStats* stats = nullptr);

// Windows paired with the skeleton of their frame. With max_windows > 0 the
// set is thinned to that many windows spread evenly over the whole sequence.
tednet::PoseDataset pose_dataset(const std::vector<synth::Session>& sessions,
                                 const csi::SyncPolicy& policy, const csi::WindowConfig& window,
                                 std::size_t max_windows = 0);

// Skeleton frames of a session from repaired ground truth, or from TED-Net
// inference when pose_model is set. Labels follow the returned frames.
struct SkeletonTrack {
  std::vector<keypoints::Skeleton> frames;
  std::vector<int> labels;
};
SkeletonTrack skeleton_track(const synth::Session& session, const tednet::TedNet* pose_model,
                             const csi::SyncPolicy& policy, const csi::WindowConfig& window,
                             const keypoints::RepairConfig& repair = {});

// Sliding action windows over every session's track.
std::vector<dgnn::ActionWindow> action_windows(const std::vector<synth::Session>& sessions,
                                               std::size_t length, std::size_t stride,
                                               const tednet::TedNet* pose_model,
                                               const csi::SyncPolicy& policy,
                                               const csi::WindowConfig& window,
                                               const keypoints::RepairConfig& repair = {});

}  // namespace wifisense::pipeline
