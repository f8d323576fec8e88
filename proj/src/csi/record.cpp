#include "wifisense/csi/record.hpp"

#include <algorithm>

#include <boost/crc.hpp>
#include <fmt/format.h>

#include "wifisense/error.hpp"

namespace wifisense::csi {

std::uint16_t crc16_ccitt(std::span<const std::uint8_t> bytes) {
  boost::crc_ccitt_type crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return static_cast<std::uint16_t>(crc.checksum());
}

RecordBytes encode_record(const CsiRecord& record) {
  RecordBytes out{};
  out[0] = kMagic0;
  out[1] = kMagic1;
  out[2] = record.receiver_id;
  for (int i = 0; i < 4; ++i) out[3 + i] = static_cast<std::uint8_t>(record.seq >> (8 * i));
  std::copy(record.amplitudes.begin(), record.amplitudes.end(), out.begin() + 7);
  const std::uint16_t crc = crc16_ccitt(std::span(out).first(kRecordSize - 2));
  out[kRecordSize - 2] = static_cast<std::uint8_t>(crc & 0xFF);
  out[kRecordSize - 1] = static_cast<std::uint8_t>(crc >> 8);
  return out;
}

CsiRecord parse_record(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kRecordSize) {
    throw TruncatedRecordError(
        fmt::format("CSI record truncated: {} of {} bytes", bytes.size(), kRecordSize));
  }
  if (bytes[0] != kMagic0 || bytes[1] != kMagic1) {
    throw BadMagicError(fmt::format("CSI record bad magic {:02X} {:02X}", bytes[0], bytes[1]));
  }
  const std::uint16_t stored = static_cast<std::uint16_t>(bytes[kRecordSize - 2] |
                                                          (bytes[kRecordSize - 1] << 8));
  const std::uint16_t computed = crc16_ccitt(bytes.first(kRecordSize - 2));
  if (stored != computed) {
    throw ChecksumError(
        fmt::format("CSI record checksum mismatch: stored {:04X}, computed {:04X}", stored, computed));
  }
  CsiRecord record;
  record.receiver_id = bytes[2];
  record.seq = 0;
  for (int i = 0; i < 4; ++i) record.seq |= static_cast<std::uint32_t>(bytes[3 + i]) << (8 * i);
  std::copy_n(bytes.begin() + 7, kSubcarriers, record.amplitudes.begin());
  return record;
}

}  // namespace wifisense::csi
