#include "wifisense/nn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_set>

#include <boost/endian/conversion.hpp>
#include <fmt/format.h>

#include "wifisense/error.hpp"

namespace wifisense::nn {

namespace {

constexpr std::array<char, 4> kMagic{'C', 'S', 'K', 'W'};

template <typename T>
void put(std::ostream& out, T value) {
  boost::endian::native_to_little_inplace(value);
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
bool get(std::istream& in, T& value) {
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) return false;
  boost::endian::little_to_native_inplace(value);
  return true;
}

void write_record(std::ostream& out, const NamedTensor& entry) {
  if (entry.name.size() > 0xFFFF) throw ConfigError("checkpoint: parameter name too long");
  const Shape& shape = entry.tensor.shape();
  if (shape.size() > 0xFF) throw ConfigError("checkpoint: tensor rank too large");
  put<std::uint16_t>(out, static_cast<std::uint16_t>(entry.name.size()));
  out.write(entry.name.data(), static_cast<std::streamsize>(entry.name.size()));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(shape.size()));
  for (std::size_t d : shape) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (double v : entry.tensor.data()) put<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
}

}  // namespace

void save_checkpoint(std::ostream& out, const ParamStore& store) {
  out.write(kMagic.data(), kMagic.size());
  put<std::uint16_t>(out, kCheckpointVersion);
  for (const auto& p : store.parameters()) write_record(out, p);
  for (const auto& b : store.buffers()) write_record(out, b);
  if (!out) throw DataError("checkpoint: write failed");
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& store) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot open '{}' for writing", path.string()));
  save_checkpoint(out, store);
}

void load_checkpoint(std::istream& in, ParamStore& store) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size()) || magic != kMagic) {
    throw BadMagicError("checkpoint: bad magic (expected \"CSKW\")");
  }
  std::uint16_t version = 0;
  if (!get(in, version)) throw TruncatedRecordError("checkpoint: missing version");
  if (version != kCheckpointVersion) {
    throw DataError(fmt::format("checkpoint: unsupported version {}", version));
  }
  std::unordered_set<std::string> seen;
  std::uint16_t name_len = 0;
  while (get(in, name_len)) {
    std::string name(name_len, '\0');
    std::uint8_t rank = 0;
    if (!in.read(name.data(), name_len) || !get(in, rank)) {
      throw TruncatedRecordError("checkpoint: truncated record header");
    }
    Shape shape(rank);
    for (auto& d : shape) {
      std::uint32_t dim = 0;
      if (!get(in, dim)) throw TruncatedRecordError("checkpoint: truncated dims of " + name);
      d = dim;
    }
    if (!store.contains(name)) {
      throw DataError(fmt::format("checkpoint: unknown entry '{}'", name));
    }
    Tensor target = store.find(name);
    if (target.shape() != shape) {
      throw DataError(fmt::format("checkpoint: '{}' has shape {} but model expects {}", name,
                                  to_string(shape), to_string(target.shape())));
    }
    auto values = target.mutable_data();
    for (double& v : values) {
      std::uint64_t bits = 0;
      if (!get(in, bits)) throw TruncatedRecordError("checkpoint: truncated payload of " + name);
      v = std::bit_cast<double>(bits);
    }
    if (!seen.insert(name).second) {
      throw DataError(fmt::format("checkpoint: duplicate entry '{}'", name));
    }
  }
  if (in.gcount() != 0) throw TruncatedRecordError("checkpoint: trailing partial record");
  for (const auto* group : {&store.parameters(), &store.buffers()})
    for (const auto& entry : *group)
      if (!seen.count(entry.name)) {
        throw DataError(fmt::format("checkpoint: missing entry '{}'", entry.name));
      }
}

void load_checkpoint(const std::filesystem::path& path, ParamStore& store) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open checkpoint '{}'", path.string()));
  load_checkpoint(in, store);
}

}  // namespace wifisense::nn
