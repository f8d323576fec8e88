#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>

#include "wifisense/nn/param_store.hpp"

namespace wifisense::nn {

// Binary layout, little-endian:
//   "CSKW" | u16 version | records...
//   record = u16 name length | UTF-8 name | u8 rank | u32 dims[rank] | f64 payload
// Parameters are written first, then buffers, each in store order.
inline constexpr std::uint16_t kCheckpointVersion = 1;

void save_checkpoint(std::ostream& out, const ParamStore& store);
void save_checkpoint(const std::filesystem::path& path, const ParamStore& store);

// Overwrites the store's values. Every record must name an existing entry of
// identical shape and every entry must be present; otherwise DataError.
void load_checkpoint(std::istream& in, ParamStore& store);
void load_checkpoint(const std::filesystem::path& path, ParamStore& store);

}  // namespace wifisense::nn
