#include "wifisense/pipeline.hpp"

#include <fmt/format.h>

#include "wifisense/error.hpp"
#include "wifisense/keypoints/repair.hpp"

namespace wifisense::pipeline {

std::vector<synth::Session> load_split(const std::filesystem::path& root, const std::string& split) {
  std::vector<synth::Session> out;
  for (const auto& dir : synth::list_sessions(root, split)) out.push_back(synth::load_session(dir));
  if (out.empty()) {
    throw DataError(fmt::format("no '{}' sessions listed in {}", split,
                                (root / "dataset.manifest").string()));
  }
  return out;
}

std::vector<csi::CsiWindow> session_windows(const synth::Session& session,
                                            const csi::SyncPolicy& policy,
                                            const csi::WindowConfig& window,
                                            csi::SyncStats* stats) {
  const auto streams = csi::split_by_receiver(session.records, policy.receivers);
  auto result = csi::synchronize(streams, policy);
  if (stats) *stats = result.stats;
  return csi::make_windows(result.samples, window);
}

tednet::PoseDataset pose_dataset(const std::vector<synth::Session>& sessions,
                                 const csi::SyncPolicy& policy, const csi::WindowConfig& window,
                                 std::size_t max_windows) {
  tednet::PoseDataset all;
  for (const auto& s : sessions) {
    for (auto& w : session_windows(s, policy, window)) {
      if (w.frame_index >= s.skeletons.size()) continue;
      all.targets.push_back(s.skeletons[w.frame_index]);
      all.windows.push_back(std::move(w));
    }
  }
  if (max_windows == 0 || max_windows >= all.size()) return all;
  tednet::PoseDataset thin;
  for (std::size_t i = 0; i < max_windows; ++i) {
    const std::size_t k = i * all.size() / max_windows;
    thin.windows.push_back(all.windows[k]);
    thin.targets.push_back(all.targets[k]);
  }
  return thin;
}

SkeletonTrack skeleton_track(const synth::Session& session, const tednet::TedNet* pose_model,
                             const csi::SyncPolicy& policy, const csi::WindowConfig& window,
                             const keypoints::RepairConfig& repair) {
  SkeletonTrack track;
  if (!pose_model) {
    track.frames = keypoints::repair(session.skeletons, repair).frames;
    track.labels = session.labels;
    return track;
  }
  const auto windows = session_windows(session, policy, window);
  for (auto& sk : tednet::infer_sequence(*pose_model, windows)) {
    if (sk.frame_index >= session.labels.size()) continue;
    track.labels.push_back(session.labels[sk.frame_index]);
    track.frames.push_back(sk);
  }
  return track;
}

std::vector<dgnn::ActionWindow> action_windows(const std::vector<synth::Session>& sessions,
                                               std::size_t length, std::size_t stride,
                                               const tednet::TedNet* pose_model,
                                               const csi::SyncPolicy& policy,
                                               const csi::WindowConfig& window,
                                               const keypoints::RepairConfig& repair) {
  std::vector<dgnn::ActionWindow> out;
  for (const auto& s : sessions) {
    const auto track = skeleton_track(s, pose_model, policy, window, repair);
    auto w = dgnn::make_action_windows(track.frames, track.labels, length, stride);
    out.insert(out.end(), std::make_move_iterator(w.begin()), std::make_move_iterator(w.end()));
  }
  return out;
}

}  // namespace wifisense::pipeline
