#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace wifisense::csi {

inline constexpr std::size_t kSubcarriers = 114;
inline constexpr std::size_t kRecordSize = 123;
inline constexpr std::uint8_t kMagic0 = 0xC5;
inline constexpr std::uint8_t kMagic1 = 0x1D;
// Hardware full scale used for amplitude normalization.
inline constexpr double kAmplitudeScale = 256.0;

// One receiver's amplitude snapshot for one transmitted packet.
struct CsiRecord {
  std::uint8_t receiver_id = 0;
  std::uint32_t seq = 0;
  std::array<std::uint8_t, kSubcarriers> amplitudes{};

  friend bool operator==(const CsiRecord&, const CsiRecord&) = default;
};

using RecordBytes = std::array<std::uint8_t, kRecordSize>;

// CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection).
std::uint16_t crc16_ccitt(std::span<const std::uint8_t> bytes);

// magic C5 1D | receiver u8 | seq u32 LE | 114 amplitudes | CRC-16 LE.
RecordBytes encode_record(const CsiRecord& record);

// Throws TruncatedRecordError, BadMagicError or ChecksumError.
CsiRecord parse_record(std::span<const std::uint8_t> bytes);

inline double normalize_amplitude(std::uint8_t raw) { return raw / kAmplitudeScale; }

}  // namespace wifisense::csi
