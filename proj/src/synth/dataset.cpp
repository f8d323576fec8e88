#include "wifisense/synth/dataset.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include <fmt/format.h>
#include <fmt/os.h>

#include "wifisense/csi/session_io.hpp"
#include "wifisense/error.hpp"
#include "wifisense/keypoints/skeleton_io.hpp"

namespace wifisense::synth {

namespace fs = std::filesystem;

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  return mix(mix(mix(mix(seed) ^ a) ^ b) ^ c);
}

constexpr std::size_t kReceivers = 3;

Session slice(const SessionInfo& base, const Motion& motion,
              const std::vector<std::vector<csi::CsiRecord>>& streams, std::size_t begin,
              std::size_t end, const std::string& split) {
  Session s;
  s.info = base;
  s.info.split = split;
  s.info.frames = end - begin;
  s.info.frame_offset = begin;
  s.info.seq_start = static_cast<std::uint32_t>(base.seq_start + begin * kSamplesPerFrame);
  s.info.duration_s = static_cast<double>(end - begin) / kFrameRate;
  for (std::size_t i = begin; i < end; ++i) {
    keypoints::Skeleton sk = motion.frames[i];
    sk.frame_index = i - begin;
    s.skeletons.push_back(sk);
    s.labels.push_back(motion.labels[i]);
  }
  std::vector<std::vector<csi::CsiRecord>> part(streams.size());
  for (std::size_t r = 0; r < streams.size(); ++r)
    part[r].assign(streams[r].begin() + begin * kSamplesPerFrame,
                   streams[r].begin() + end * kSamplesPerFrame);
  s.records = interleave(part);
  return s;
}

template <typename T>
T parse_number(const std::string& text, const std::string& key, const fs::path& path) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw DataError(fmt::format("{}: invalid value '{}' for '{}'", path.string(), text, key));
  }
  return value;
}

const std::string& require(const std::map<std::string, std::string>& kv, const std::string& key,
                           const fs::path& path) {
  const auto it = kv.find(key);
  if (it == kv.end()) throw DataError(fmt::format("{}: missing key '{}'", path.string(), key));
  return it->second;
}

}  // namespace

std::vector<Session> generate_sessions(const DatasetConfig& config) {
  if (config.subjects == 0) throw ConfigError("subjects must be positive");
  if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0)) {
    throw ConfigError("train_fraction must lie in (0, 1)");
  }
  if (config.fall_train_repetitions > config.fall_repetitions) {
    throw ConfigError("fall_train_repetitions exceeds fall_repetitions");
  }
  const CsiForwardModel model({mix(config.seed ^ 0x5eedf00dULL), kReceivers, config.gain,
                               config.noise_sigma});
  std::vector<Session> out;
  for (std::size_t subject = 0; subject < config.subjects; ++subject) {
    for (Action action : config.actions) {
      const auto a = static_cast<std::uint64_t>(action);
      const std::size_t reps = is_fall(action) ? config.fall_repetitions : 1;
      for (std::size_t rep = 0; rep < reps; ++rep) {
        MotionScript script;
        script.action = action;
        script.seed = derive(config.seed, subject, a, rep);
        // Alternating center / left start positions.
        script.start_x = (subject + rep) % 2 == 0 ? 0.5 : 0.35;
        if (is_fall(action)) {
          script.pre_fall_s = config.fall_lead_in_s;
          script.duration_s = config.fall_lead_in_s + config.fall_duration_s;
        } else {
          script.duration_s = config.action_duration_s;
        }
        const Motion motion = generate_motion(script);
        const auto streams = model.render(motion.frames, 0, derive(config.seed, subject, a, rep + 1000));

        SessionInfo base;
        base.action = action;
        base.subject = subject;
        base.repetition = rep;
        base.seed = script.seed;
        const std::size_t n = motion.frames.size();
        if (is_fall(action)) {
          base.name = fmt::format("s{}_{}_r{}", subject, to_string(action), rep);
          out.push_back(slice(base, motion, streams, 0, n,
                              rep < config.fall_train_repetitions ? "train" : "test"));
        } else {
          base.name = fmt::format("s{}_{}", subject, to_string(action));
          const auto n_train = static_cast<std::size_t>(
              std::llround(config.train_fraction * static_cast<double>(n)));
          out.push_back(slice(base, motion, streams, 0, n_train, "train"));
          if (n_train < n) out.push_back(slice(base, motion, streams, n_train, n, "test"));
        }
      }
    }
  }
  return out;
}

void write_session_manifest(const fs::path& path, const SessionInfo& info) {
  auto out = fmt::output_file(path.string());
  out.print("name = {}\n", info.name);
  out.print("split = {}\n", info.split);
  out.print("action = {}\n", to_string(info.action));
  out.print("subject = {}\n", info.subject);
  out.print("repetition = {}\n", info.repetition);
  out.print("seed = {}\n", info.seed);
  out.print("duration = {}\n", info.duration_s);
  out.print("frames = {}\n", info.frames);
  out.print("frame_offset = {}\n", info.frame_offset);
  out.print("seq_start = {}\n", info.seq_start);
  out.print("receivers = {}\n", kReceivers);
  out.print("samples_per_frame = {}\n", kSamplesPerFrame);
}

std::map<std::string, std::string> read_key_values(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t line_no = 0;
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return std::string();
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw DataError(fmt::format("{}:{}: expected 'key = value'", path.string(), line_no));
    }
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw DataError(fmt::format("{}:{}: empty key", path.string(), line_no));
    if (!kv.emplace(key, value).second) {
      throw DataError(fmt::format("{}:{}: duplicate key '{}'", path.string(), line_no, key));
    }
  }
  return kv;
}

SessionInfo read_session_manifest(const fs::path& path) {
  const auto kv = read_key_values(path);
  SessionInfo info;
  info.name = require(kv, "name", path);
  info.split = require(kv, "split", path);
  info.action = parse_action(require(kv, "action", path));
  info.subject = parse_number<std::size_t>(require(kv, "subject", path), "subject", path);
  info.repetition = parse_number<std::size_t>(require(kv, "repetition", path), "repetition", path);
  info.seed = parse_number<std::uint64_t>(require(kv, "seed", path), "seed", path);
  info.duration_s = parse_number<double>(require(kv, "duration", path), "duration", path);
  info.frames = parse_number<std::size_t>(require(kv, "frames", path), "frames", path);
  info.frame_offset =
      parse_number<std::size_t>(require(kv, "frame_offset", path), "frame_offset", path);
  info.seq_start = parse_number<std::uint32_t>(require(kv, "seq_start", path), "seq_start", path);
  return info;
}

std::vector<SessionInfo> write_dataset(const fs::path& out, const DatasetConfig& config) {
  const auto sessions = generate_sessions(config);
  for (const auto& s : sessions) {
    const fs::path dir = out / s.info.split / s.info.name;
    if (fs::exists(dir)) {
      throw DataError(fmt::format("output session '{}' already exists", dir.string()));
    }
  }
  std::vector<SessionInfo> infos;
  for (const auto& s : sessions) {
    const fs::path dir = out / s.info.split / s.info.name;
    fs::create_directories(dir);
    csi::write_csis(dir / "session.csis", s.records);
    keypoints::write_skeleton_csv(dir / "skeleton.csv", s.skeletons);
    keypoints::write_skeleton_bin(dir / "skeleton.bin", s.skeletons);
    keypoints::write_labels_csv(dir / "labels.csv", s.labels);
    write_session_manifest(dir / "manifest", s.info);
    infos.push_back(s.info);
  }
  auto manifest = fmt::output_file((out / "dataset.manifest").string());
  manifest.print("seed = {}\n", config.seed);
  manifest.print("subjects = {}\n", config.subjects);
  manifest.print("sessions = {}\n", infos.size());
  for (std::size_t i = 0; i < infos.size(); ++i)
    manifest.print("session.{} = {}/{}\n", i, infos[i].split, infos[i].name);
  return infos;
}

Session load_session(const fs::path& dir) {
  Session s;
  s.info = read_session_manifest(dir / "manifest");
  s.records = csi::read_csis(dir / "session.csis");
  s.skeletons = keypoints::read_skeleton_bin(dir / "skeleton.bin");
  s.labels = keypoints::read_labels_csv(dir / "labels.csv");
  const std::size_t n = s.info.frames;
  if (s.skeletons.size() != n || s.labels.size() != n ||
      s.records.size() != n * kSamplesPerFrame * kReceivers) {
    throw DataError(fmt::format(
        "{}: manifest says {} frames but found {} skeletons, {} labels, {} records",
        dir.string(), n, s.skeletons.size(), s.labels.size(), s.records.size()));
  }
  return s;
}

std::vector<fs::path> list_sessions(const fs::path& root, const std::string& split) {
  const fs::path path = root / "dataset.manifest";
  const auto kv = read_key_values(path);
  const auto count = parse_number<std::size_t>(require(kv, "sessions", path), "sessions", path);
  std::vector<fs::path> out;
  for (std::size_t i = 0; i < count; ++i) {
    const std::string& rel = require(kv, fmt::format("session.{}", i), path);
    if (rel.rfind(split + "/", 0) == 0) out.push_back(root / rel);
  }
  return out;
}

}  // namespace wifisense::synth
