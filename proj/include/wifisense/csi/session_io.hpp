#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "wifisense/csi/record.hpp"

namespace wifisense::csi {

// `.csis` session file: concatenated 123-byte records.
std::vector<CsiRecord> read_csis(const std::filesystem::path& path);
void write_csis(const std::filesystem::path& path, std::span<const CsiRecord> records);

// Debug CSV: `receiver,seq,a0,...,a113`, optional header line.
std::vector<CsiRecord> read_csi_csv(const std::filesystem::path& path);
void write_csi_csv(const std::filesystem::path& path, std::span<const CsiRecord> records);

// Dispatches on extension (.csis or .csv).
std::vector<CsiRecord> read_records(const std::filesystem::path& path);

}  // namespace wifisense::csi
