#include "wifisense/config/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include <fmt/format.h>
#include <fmt/os.h>

#include "wifisense/error.hpp"

namespace wifisense::config {

namespace fs = std::filesystem;

const std::vector<KeySpec>& config_keys() {
  using T = ValueType;
  static const std::vector<KeySpec> keys{
      {"synth.seed", T::integer, "0", "dataset seed; subjects and the forward model derive from it"},
      {"synth.subjects", T::integer, "1", "synthetic subjects (generator seeds)"},
      {"synth.actions", T::text_list, "stand,walk,squat,fall_backward,fall_sideways",
       "scripted actions; both falls map to class 3"},
      {"synth.duration", T::real, "30", "seconds per continuous stand/walk/squat recording"},
      {"synth.fall_lead_in", T::real, "5", "seconds of walk or squat before each fall"},
      {"synth.fall_duration", T::real, "5", "seconds of fall after the lead-in"},
      {"synth.fall_repetitions", T::integer, "5", "fall repetitions per subject"},
      {"synth.fall_train_repetitions", T::integer, "4", "first N fall repetitions train, rest test"},
      {"synth.train_fraction", T::real, "0.8", "leading share of each continuous recording used for training"},
      {"synth.noise_sigma", T::real, "1", "amplitude noise before 8-bit quantization"},
      {"synth.gain", T::real, "3", "forward-model pre-tanh gain"},
      {"ingest.receivers", T::integer, "3", "receiver streams aligned by sequence number"},
      {"ingest.window", T::integer, "10", "samples per TED-Net window (300 Hz -> 30 Hz)"},
      {"ingest.hop", T::integer, "10", "samples between window starts; equal to window for one output per frame"},
      {"ingest.wrap_threshold", T::integer, "2147483648",
       "seq decreases larger than this are 32-bit wraps, smaller ones corruption"},
      {"keypoints.displacement_threshold", T::real, "0.15",
       "normalized jump that marks a keypoint as displaced"},
      {"tednet.seed", T::integer, "0", "TED-Net initialization seed"},
      {"tednet.share_encoder_weights", T::boolean, "false",
       "one encoder stack per receiver unless true (ablation)"},
      {"tednet.positional_encoding", T::boolean, "true", "add sinusoidal positions to the 34-step sequence"},
      {"tednet.transformer_layers", T::integer, "2", "transformer encoder depth"},
      {"tednet.heads", T::integer, "8", "attention heads"},
      {"tednet.ffn_width", T::integer, "1536", "feed-forward width, 4 x d_model"},
      {"tednet.dropout", T::real, "0", "dropout inside encoder layers"},
      {"train_pose.epochs", T::integer, "100", "training epochs"},
      {"train_pose.batch_size", T::integer, "512", "minibatch size"},
      {"train_pose.lr", T::real, "0.0003", "Adam learning rate"},
      {"train_pose.shuffle", T::boolean, "true", "shuffle windows every epoch"},
      {"train_pose.max_windows", T::integer, "0", "cap on training windows, 0 for all"},
      {"train_pose.target_mse", T::real, "0", "stop once the epoch train MSE falls below this, 0 disables"},
      {"dgnn.seed", T::integer, "0", "DGNN initialization seed"},
      {"dgnn.window", T::integer, "30", "frames per action window (1 s at 30 Hz)"},
      {"dgnn.dropout", T::real, "0.5", "rate of Dropout1 and Dropout2"},
      {"dgnn.temporal_edge_mode", T::text, "shared",
       "shared: edge stream reuses each block's temporal conv; vertex_only: vertex stream only"},
      {"train_action.epochs", T::integer, "30", "DGNN training epochs"},
      {"train_action.batch_size", T::integer, "32", "DGNN minibatch size"},
      {"train_action.lr", T::real, "0.001", "DGNN Adam learning rate"},
      {"train_action.stride", T::integer, "1", "frames between consecutive action windows"},
      {"train_action.shuffle", T::boolean, "true", "shuffle windows every epoch"},
      {"eval.alphas", T::real_list, "0.1,0.2,0.3,0.4,0.5", "thresholds in torso diagonals; d <= alpha counts"},
  };
  return keys;
}

namespace {

const KeySpec* find_spec(const std::string& key) {
  for (const auto& s : config_keys())
    if (s.key == key) return &s;
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma - start)));
    if (comma == std::string::npos) return out;
    start = comma + 1;
  }
}

template <typename N>
bool parse_number(const std::string& s, N& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void validate(const KeySpec& spec, const std::string& value) {
  auto fail = [&](const char* what) {
    throw ConfigError(fmt::format("config key '{}': '{}' is not {}", spec.key, value, what));
  };
  switch (spec.type) {
    case ValueType::integer: {
      std::int64_t v;
      if (!parse_number(value, v)) fail("an integer");
      break;
    }
    case ValueType::real: {
      double v;
      if (!parse_number(value, v)) fail("a number");
      break;
    }
    case ValueType::boolean:
      if (value != "true" && value != "false") fail("true or false");
      break;
    case ValueType::text:
      if (value.empty()) fail("a non-empty string");
      break;
    case ValueType::real_list:
      for (const auto& item : split_list(value)) {
        double v;
        if (!parse_number(item, v)) fail("a comma-separated list of numbers");
      }
      break;
    case ValueType::text_list:
      for (const auto& item : split_list(value))
        if (item.empty()) fail("a comma-separated list");
      break;
  }
}

}  // namespace

std::string config_help() {
  std::size_t width = 0;
  for (const auto& s : config_keys()) width = std::max(width, s.key.size() + s.default_value.size() + 3);
  std::string out = "Config keys (file lines `section.key = value`; --set key=value overrides):\n";
  for (const auto& s : config_keys()) {
    out += fmt::format("  {:<{}}  {}\n", fmt::format("{} = {}", s.key, s.default_value), width,
                       s.help);
  }
  return out;
}

RunConfig::RunConfig() {
  for (const auto& s : config_keys()) values_[s.key] = s.default_value;
}

RunConfig RunConfig::load(const fs::path& path) {
  RunConfig c;
  c.merge_file(path);
  return c;
}

void RunConfig::merge_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{}:{}: expected 'section.key = value'", path.string(), line_no));
    }
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", path.string(), line_no, e.what()));
    }
  }
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const KeySpec* spec = find_spec(key);
  if (!spec) throw ConfigError(fmt::format("unknown config key '{}' (see --help-config)", key));
  validate(*spec, value);
  values_[key] = value;
}

void RunConfig::set_assignment(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError(fmt::format("--set expects key=value, got '{}'", assignment));
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& RunConfig::raw(const std::string& key, ValueType expected) const {
  const KeySpec* spec = find_spec(key);
  if (!spec) throw ConfigError(fmt::format("unknown config key '{}'", key));
  if (spec->type != expected) throw ConfigError(fmt::format("config key '{}' read with the wrong type", key));
  return values_.at(key);
}

std::int64_t RunConfig::integer(const std::string& key) const {
  std::int64_t v = 0;
  parse_number(raw(key, ValueType::integer), v);
  return v;
}

std::uint64_t RunConfig::unsigned_integer(const std::string& key) const {
  const std::int64_t v = integer(key);
  if (v < 0) throw ConfigError(fmt::format("config key '{}' must be non-negative", key));
  return static_cast<std::uint64_t>(v);
}

double RunConfig::real(const std::string& key) const {
  double v = 0;
  parse_number(raw(key, ValueType::real), v);
  return v;
}

bool RunConfig::boolean(const std::string& key) const { return raw(key, ValueType::boolean) == "true"; }

const std::string& RunConfig::text(const std::string& key) const { return raw(key, ValueType::text); }

std::vector<double> RunConfig::reals(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : split_list(raw(key, ValueType::real_list))) {
    double v = 0;
    parse_number(item, v);
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> RunConfig::texts(const std::string& key) const {
  return split_list(raw(key, ValueType::text_list));
}

std::string RunConfig::dump() const {
  std::string out;
  for (const auto& [k, v] : values_) out += fmt::format("{} = {}\n", k, v);
  return out;
}

void RunConfig::write(const fs::path& path) const {
  auto out = fmt::output_file(path.string());
  out.print("{}", dump());
}

synth::DatasetConfig dataset_config(const RunConfig& c) {
  synth::DatasetConfig d;
  d.seed = c.unsigned_integer("synth.seed");
  d.subjects = c.unsigned_integer("synth.subjects");
  d.actions.clear();
  for (const auto& name : c.texts("synth.actions")) d.actions.push_back(synth::parse_action(name));
  d.action_duration_s = c.real("synth.duration");
  d.fall_lead_in_s = c.real("synth.fall_lead_in");
  d.fall_duration_s = c.real("synth.fall_duration");
  d.fall_repetitions = c.unsigned_integer("synth.fall_repetitions");
  d.fall_train_repetitions = c.unsigned_integer("synth.fall_train_repetitions");
  d.train_fraction = c.real("synth.train_fraction");
  d.noise_sigma = c.real("synth.noise_sigma");
  d.gain = c.real("synth.gain");
  return d;
}

csi::SyncPolicy sync_policy(const RunConfig& c) {
  csi::SyncPolicy p;
  p.receivers = c.unsigned_integer("ingest.receivers");
  p.wrap_threshold = c.unsigned_integer("ingest.wrap_threshold");
  return p;
}

csi::WindowConfig window_config(const RunConfig& c) {
  return {c.unsigned_integer("ingest.window"), c.unsigned_integer("ingest.hop")};
}

keypoints::RepairConfig repair_config(const RunConfig& c) {
  keypoints::RepairConfig r;
  r.displacement_threshold = c.real("keypoints.displacement_threshold");
  return r;
}

tednet::TedNetConfig tednet_config(const RunConfig& c) {
  tednet::TedNetConfig t;
  t.receivers = c.unsigned_integer("ingest.receivers");
  t.window = c.unsigned_integer("ingest.window");
  t.seed = c.unsigned_integer("tednet.seed");
  t.share_encoder_weights = c.boolean("tednet.share_encoder_weights");
  t.positional_encoding = c.boolean("tednet.positional_encoding");
  t.transformer_layers = c.unsigned_integer("tednet.transformer_layers");
  t.heads = c.unsigned_integer("tednet.heads");
  t.ffn_width = c.unsigned_integer("tednet.ffn_width");
  t.dropout = c.real("tednet.dropout");
  return t;
}

tednet::TrainConfig pose_train_config(const RunConfig& c) {
  tednet::TrainConfig t;
  t.epochs = c.unsigned_integer("train_pose.epochs");
  t.batch_size = c.unsigned_integer("train_pose.batch_size");
  t.adam.lr = c.real("train_pose.lr");
  t.seed = c.unsigned_integer("tednet.seed");
  t.shuffle = c.boolean("train_pose.shuffle");
  return t;
}

dgnn::DgnnConfig dgnn_config(const RunConfig& c) {
  dgnn::DgnnConfig d;
  d.seed = c.unsigned_integer("dgnn.seed");
  d.window = c.unsigned_integer("dgnn.window");
  d.dropout = c.real("dgnn.dropout");
  d.temporal_edge_mode = dgnn::parse_temporal_edge_mode(c.text("dgnn.temporal_edge_mode"));
  return d;
}

dgnn::ActionTrainConfig action_train_config(const RunConfig& c) {
  dgnn::ActionTrainConfig t;
  t.epochs = c.unsigned_integer("train_action.epochs");
  t.batch_size = c.unsigned_integer("train_action.batch_size");
  t.adam.lr = c.real("train_action.lr");
  t.seed = c.unsigned_integer("dgnn.seed");
  t.shuffle = c.boolean("train_action.shuffle");
  return t;
}

metrics::PckConfig pck_config(const RunConfig& c) { return {c.reals("eval.alphas")}; }

}  // namespace wifisense::config
