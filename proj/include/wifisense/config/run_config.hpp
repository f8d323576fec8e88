#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "wifisense/csi/sync.hpp"
#include "wifisense/csi/window.hpp"
#include "wifisense/dgnn/dgnn.hpp"
#include "wifisense/dgnn/train.hpp"
#include "wifisense/keypoints/repair.hpp"
#include "wifisense/metrics/pck.hpp"
#include "wifisense/synth/dataset.hpp"
#include "wifisense/tednet/tednet.hpp"
#include "wifisense/tednet/train.hpp"

namespace wifisense::config {

enum class ValueType { integer, real, boolean, text, real_list, text_list };

struct KeySpec {
  std::string key;  // section.name
  ValueType type;
  std::string default_value;
  std::string help;  // description and rationale tag
};

// Every recognized key in a fixed order.
const std::vector<KeySpec>& config_keys();

// Aligned listing of every key, its default and rationale.
std::string config_help();

// Flat `section.key = value` configuration. Starts from defaults; unknown keys
// and unparsable values throw ConfigError naming the key.
class RunConfig {
 public:
  RunConfig();

  static RunConfig load(const std::filesystem::path& path);
  // Applies a file on top of the current values.
  void merge_file(const std::filesystem::path& path);
  void set(const std::string& key, const std::string& value);
  // "key=value" form used by --set.
  void set_assignment(const std::string& assignment);

  std::int64_t integer(const std::string& key) const;
  std::uint64_t unsigned_integer(const std::string& key) const;
  double real(const std::string& key) const;
  bool boolean(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  std::vector<std::string> texts(const std::string& key) const;

  // Every key in sorted order, one `key = value` per line.
  std::string dump() const;
  void write(const std::filesystem::path& path) const;

 private:
  const std::string& raw(const std::string& key, ValueType expected) const;
  std::map<std::string, std::string> values_;
};

synth::DatasetConfig dataset_config(const RunConfig& c);
csi::SyncPolicy sync_policy(const RunConfig& c);
csi::WindowConfig window_config(const RunConfig& c);
keypoints::RepairConfig repair_config(const RunConfig& c);
tednet::TedNetConfig tednet_config(const RunConfig& c);
tednet::TrainConfig pose_train_config(const RunConfig& c);
dgnn::DgnnConfig dgnn_config(const RunConfig& c);
dgnn::ActionTrainConfig action_train_config(const RunConfig& c);
metrics::PckConfig pck_config(const RunConfig& c);

}  // namespace wifisense::config
