#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <vector>

#include "wifisense/csi/record.hpp"

namespace wifisense::testing {

struct SyncScenario {
  std::vector<csi::CsiRecord> interleaved;       // all receivers, arrival order
  std::vector<std::vector<std::uint64_t>> kept;  // per receiver, extended seqs (deduplicated)
  std::size_t receivers = 0;
};

// Random drops, duplicates and cross-receiver interleaving. Some scenarios start
// near 2^32 so the counter wraps mid-stream; those keep the first packet on every
// receiver, otherwise a stream opening after the wrap has no epoch reference.
inline SyncScenario make_sync_scenario(std::mt19937_64& rng) {
  SyncScenario sc;
  sc.receivers = std::uniform_int_distribution<std::size_t>(1, 4)(rng);
  const std::size_t length = std::uniform_int_distribution<std::size_t>(0, 60)(rng);
  const bool wrap = std::bernoulli_distribution(0.2)(rng);
  const std::uint64_t start =
      wrap ? (std::uint64_t{1} << 32) - std::uniform_int_distribution<std::uint64_t>(1, 30)(rng)
           : std::uniform_int_distribution<std::uint64_t>(0, 1000)(rng);
  const double drop = std::uniform_real_distribution<double>(0.0, 0.5)(rng);
  const double dup = std::uniform_real_distribution<double>(0.0, 0.3)(rng);
  const std::size_t max_gap = std::uniform_int_distribution<std::size_t>(1, 3)(rng);
  std::bernoulli_distribution drop_d(drop), dup_d(dup);
  std::uniform_int_distribution<std::size_t> gap_d(1, max_gap);
  std::uniform_int_distribution<int> amp(0, 255);

  std::vector<std::vector<csi::CsiRecord>> streams(sc.receivers);
  sc.kept.resize(sc.receivers);
  std::uint64_t ext = start;
  for (std::size_t n = 0; n < length; ++n, ext += gap_d(rng)) {
    for (std::size_t r = 0; r < sc.receivers; ++r) {
      if (!(wrap && n == 0) && drop_d(rng)) continue;
      csi::CsiRecord rec;
      rec.receiver_id = static_cast<std::uint8_t>(r);
      rec.seq = static_cast<std::uint32_t>(ext);
      rec.amplitudes[0] = static_cast<std::uint8_t>(amp(rng));
      rec.amplitudes[1] = static_cast<std::uint8_t>(r);
      streams[r].push_back(rec);
      sc.kept[r].push_back(ext);
      while (dup_d(rng)) streams[r].push_back(rec);
    }
  }
  // merge streams in random order, keeping per-stream order
  std::vector<std::size_t> pos(sc.receivers, 0);
  std::size_t remaining = 0;
  for (const auto& s : streams) remaining += s.size();
  while (remaining > 0) {
    std::size_t r = std::uniform_int_distribution<std::size_t>(0, sc.receivers - 1)(rng);
    while (pos[r] >= streams[r].size()) r = (r + 1) % sc.receivers;
    sc.interleaved.push_back(streams[r][pos[r]++]);
    --remaining;
  }
  return sc;
}

// Sorted intersection of every receiver's seq set, by plain set operations.
inline std::vector<std::uint64_t> brute_force_intersection(
    const std::vector<std::vector<std::uint64_t>>& kept) {
  if (kept.empty()) return {};
  std::set<std::uint64_t> common(kept[0].begin(), kept[0].end());
  for (std::size_t r = 1; r < kept.size(); ++r) {
    const std::set<std::uint64_t> other(kept[r].begin(), kept[r].end());
    std::set<std::uint64_t> next;
    std::set_intersection(common.begin(), common.end(), other.begin(), other.end(),
                          std::inserter(next, next.begin()));
    common = std::move(next);
  }
  return {common.begin(), common.end()};
}

}  // namespace wifisense::testing
