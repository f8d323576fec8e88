#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "wifisense/csi/record.hpp"
#include "wifisense/keypoints/skeleton.hpp"
#include "wifisense/synth/forward_model.hpp"
#include "wifisense/synth/motion.hpp"

namespace wifisense::synth {

struct DatasetConfig {
  std::uint64_t seed = 0;
  std::size_t subjects = 1;
  std::vector<Action> actions{Action::stand, Action::walk, Action::squat, Action::fall_backward,
                              Action::fall_sideways};
  double action_duration_s = 30.0;  // continuous stand / walk / squat recordings
  double fall_lead_in_s = 5.0;
  double fall_duration_s = 5.0;
  std::size_t fall_repetitions = 5;
  std::size_t fall_train_repetitions = 4;
  double train_fraction = 0.8;
  double noise_sigma = 1.0;
  double gain = 3.0;
};

struct SessionInfo {
  std::string name;   // e.g. s0_walk or s0_fall_backward_r2
  std::string split;  // train | test
  Action action = Action::stand;
  std::size_t subject = 0;
  std::size_t repetition = 0;
  std::uint64_t seed = 0;
  double duration_s = 0.0;
  std::size_t frames = 0;
  std::size_t frame_offset = 0;  // first frame within the generated sequence
  std::uint32_t seq_start = 0;
};

// In-memory session: interleaved records of all receivers, skeletons with
// frame indices from 0, and per-frame labels.
struct Session {
  SessionInfo info;
  std::vector<csi::CsiRecord> records;
  std::vector<keypoints::Skeleton> skeletons;
  std::vector<int> labels;
};

// Continuous recordings split by duration (leading train_fraction to train);
// fall repetitions split by index. Deterministic per config.
std::vector<Session> generate_sessions(const DatasetConfig& config);

// Writes <out>/<split>/<name>/{session.csis, skeleton.csv, skeleton.bin,
// labels.csv, manifest} and <out>/dataset.manifest. Throws DataError if a
// session directory already exists.
std::vector<SessionInfo> write_dataset(const std::filesystem::path& out,
                                       const DatasetConfig& config);

// Session manifest: `key = value` lines.
void write_session_manifest(const std::filesystem::path& path, const SessionInfo& info);
SessionInfo read_session_manifest(const std::filesystem::path& path);

// Loads a session directory; checks manifest frame counts against the files.
Session load_session(const std::filesystem::path& dir);

// Session directories of one split listed in <root>/dataset.manifest, in order.
std::vector<std::filesystem::path> list_sessions(const std::filesystem::path& root,
                                                 const std::string& split);

// Parses `key = value` lines; '#' starts a comment. Throws DataError on a
// malformed line or duplicate key.
std::map<std::string, std::string> read_key_values(const std::filesystem::path& path);

}  // namespace wifisense::synth
