#include "wifisense/csi/session_io.hpp"

#include <charconv>
#include <fstream>
#include <iterator>
#include <string>

#include <fmt/format.h>

#include "wifisense/error.hpp"

namespace wifisense::csi {

std::vector<CsiRecord> read_csis(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(fmt::format("cannot open session file '{}'", path.string()));
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  std::vector<CsiRecord> records;
  records.reserve(bytes.size() / kRecordSize);
  std::span<const std::uint8_t> rest(bytes);
  std::size_t index = 0;
  while (!rest.empty()) {
    try {
      records.push_back(parse_record(rest));
    } catch (const DataError& e) {
      throw DataError(fmt::format("{}: record {}: {}", path.string(), index, e.what()));
    }
    rest = rest.subspan(kRecordSize);
    ++index;
  }
  return records;
}

void write_csis(const std::filesystem::path& path, std::span<const CsiRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write session file '{}'", path.string()));
  for (const auto& r : records) {
    const RecordBytes bytes = encode_record(r);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
}

namespace {
template <typename T>
T parse_field(std::string_view field, const std::filesystem::path& path, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size()) {
    throw DataError(fmt::format("{}:{}: invalid field '{}'", path.string(), line, field));
  }
  return value;
}
}  // namespace

std::vector<CsiRecord> read_csi_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open CSV '{}'", path.string()));
  std::vector<CsiRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_no == 1 && line.rfind("receiver", 0) == 0) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 2 + kSubcarriers) {
      throw DataError(fmt::format("{}:{}: expected {} fields, got {}", path.string(), line_no,
                                  2 + kSubcarriers, fields.size()));
    }
    CsiRecord r;
    const auto receiver = parse_field<unsigned>(fields[0], path, line_no);
    if (receiver > 255) throw DataError(fmt::format("{}:{}: receiver out of range", path.string(), line_no));
    r.receiver_id = static_cast<std::uint8_t>(receiver);
    r.seq = parse_field<std::uint32_t>(fields[1], path, line_no);
    for (std::size_t k = 0; k < kSubcarriers; ++k) {
      const auto a = parse_field<unsigned>(fields[2 + k], path, line_no);
      if (a > 255) {
        throw DataError(fmt::format("{}:{}: amplitude {} outside 0..255", path.string(), line_no, a));
      }
      r.amplitudes[k] = static_cast<std::uint8_t>(a);
    }
    records.push_back(r);
  }
  return records;
}

void write_csi_csv(const std::filesystem::path& path, std::span<const CsiRecord> records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError(fmt::format("cannot write CSV '{}'", path.string()));
  out << "receiver,seq";
  for (std::size_t k = 0; k < kSubcarriers; ++k) out << ",a" << k;
  out << '\n';
  for (const auto& r : records) {
    out << unsigned(r.receiver_id) << ',' << r.seq;
    for (auto a : r.amplitudes) out << ',' << unsigned(a);
    out << '\n';
  }
}

std::vector<CsiRecord> read_records(const std::filesystem::path& path) {
  const auto ext = path.extension();
  if (ext == ".csis") return read_csis(path);
  if (ext == ".csv") return read_csi_csv(path);
  throw DataError(fmt::format("unknown CSI file type '{}' (expected .csis or .csv)", path.string()));
}

}  // namespace wifisense::csi
