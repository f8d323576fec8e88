#include "wifisense/keypoints/skeleton_io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <fstream>
#include <map>
#include <string>

#include <boost/endian/conversion.hpp>
#include <fmt/format.h>
#include <fmt/os.h>

#include "wifisense/error.hpp"

namespace wifisense::keypoints {

namespace {

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  while (true) {
    const auto comma = line.find(',');
    out.push_back(line.substr(0, comma));
    if (comma == std::string_view::npos) return out;
    line.remove_prefix(comma + 1);
  }
}

template <typename T>
T parse(std::string_view field, const std::filesystem::path& path, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DataError(fmt::format("{}:{}: invalid field '{}'", path.string(), line, field));
  }
  return value;
}

template <typename T>
void put(std::ofstream& out, T value) {
  boost::endian::native_to_little_inplace(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) {
    throw TruncatedRecordError(fmt::format("{}: truncated skeleton block", path.string()));
  }
  boost::endian::little_to_native_inplace(value);
  return value;
}

constexpr std::array<char, 4> kSkeletonMagic{'C', 'S', 'K', 'S'};
constexpr std::uint16_t kSkeletonVersion = 1;

}  // namespace

void write_skeleton_csv(const std::filesystem::path& path, std::span<const Skeleton> frames) {
  auto out = fmt::output_file(path.string());
  out.print("frame,joint_index,x,y,valid\n");
  for (const auto& s : frames)
    for (std::size_t j = 0; j < kJoints; ++j) {
      const Keypoint& k = s.keypoints[j];
      out.print("{},{},{},{},{}\n", s.frame_index, j, k.x, k.y, k.valid ? 1 : 0);
    }
}

std::vector<Skeleton> read_skeleton_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open skeleton CSV '{}'", path.string()));
  std::map<std::size_t, Skeleton> frames;
  std::map<std::size_t, std::size_t> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line.rfind("frame", 0) == 0)) continue;
    const auto f = split(line);
    if (f.size() != 5) {
      throw DataError(fmt::format("{}:{}: expected 5 fields", path.string(), line_no));
    }
    const auto frame = parse<std::size_t>(f[0], path, line_no);
    const auto joint = parse<std::size_t>(f[1], path, line_no);
    if (joint >= kJoints) {
      throw DataError(fmt::format("{}:{}: joint index {} out of range", path.string(), line_no, joint));
    }
    Skeleton& s = frames[frame];
    s.frame_index = frame;
    Keypoint& k = s.keypoints[joint];
    k.x = parse<double>(f[2], path, line_no);
    k.y = parse<double>(f[3], path, line_no);
    k.valid = parse<int>(f[4], path, line_no) != 0;
    ++seen[frame];
  }
  std::vector<Skeleton> out;
  for (auto& [frame, s] : frames) {
    if (seen[frame] != kJoints) {
      throw DataError(fmt::format("{}: frame {} has {} of {} joints", path.string(), frame,
                                  seen[frame], kJoints));
    }
    out.push_back(s);
  }
  return out;
}

void write_skeleton_bin(const std::filesystem::path& path, std::span<const Skeleton> frames) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
  out.write(kSkeletonMagic.data(), kSkeletonMagic.size());
  put<std::uint16_t>(out, kSkeletonVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(frames.size()));
  for (const auto& s : frames) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(s.frame_index));
    for (const auto& k : s.keypoints) {
      put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(k.x));
      put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(k.y));
      put<std::uint8_t>(out, k.valid ? 1 : 0);
    }
  }
}

std::vector<Skeleton> read_skeleton_bin(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kSkeletonMagic) {
    throw BadMagicError(fmt::format("{}: bad skeleton block magic", path.string()));
  }
  if (get<std::uint16_t>(in, path) != kSkeletonVersion) {
    throw DataError(fmt::format("{}: unsupported skeleton block version", path.string()));
  }
  const auto count = get<std::uint32_t>(in, path);
  std::vector<Skeleton> out(count);
  for (auto& s : out) {
    s.frame_index = get<std::uint32_t>(in, path);
    for (auto& k : s.keypoints) {
      k.x = std::bit_cast<double>(get<std::uint64_t>(in, path));
      k.y = std::bit_cast<double>(get<std::uint64_t>(in, path));
      k.valid = get<std::uint8_t>(in, path) != 0;
    }
  }
  return out;
}

void write_labels_csv(const std::filesystem::path& path, std::span<const int> labels,
                      std::size_t first_frame) {
  auto out = fmt::output_file(path.string());
  out.print("frame,label\n");
  for (std::size_t i = 0; i < labels.size(); ++i) out.print("{},{}\n", first_frame + i, labels[i]);
}

std::vector<int> read_labels_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open labels CSV '{}'", path.string()));
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || (line_no == 1 && line.rfind("frame", 0) == 0)) continue;
    const auto f = split(line);
    if (f.size() != 2) throw DataError(fmt::format("{}:{}: expected 2 fields", path.string(), line_no));
    labels.push_back(parse<int>(f[1], path, line_no));
  }
  return labels;
}

}  // namespace wifisense::keypoints
