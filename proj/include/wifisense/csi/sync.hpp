#pragma once

#include <array>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <functional>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "wifisense/csi/record.hpp"

namespace wifisense::csi {

struct SyncPolicy {
  std::size_t receivers = 3;
  // A decrease larger than this is read as 32-bit wraparound; smaller
  // decreases are stream corruption.
  std::uint64_t wrap_threshold = std::uint64_t{1} << 31;
};

// One packet observed by every receiver, amplitudes divided by 256.
struct AlignedSample {
  std::uint32_t seq = 0;
  std::uint64_t extended_seq = 0;  // seq plus 2^32 per observed wrap
  std::vector<std::array<double, kSubcarriers>> receivers;
};

struct SyncStats {
  std::size_t aligned = 0;
  // Distinct sequence numbers seen on some but not all receivers.
  std::size_t dropped_seqs = 0;
  std::vector<std::size_t> unmatched_records;  // per receiver
  std::vector<std::size_t> duplicates;         // per receiver
  std::vector<std::size_t> wraps;              // per receiver
};

// Yields one receiver's records in arrival order; nullopt at end of stream.
using RecordSource = std::function<std::optional<CsiRecord>()>;

// Pull-based alignment of R receiver streams by packet sequence number.
// Emits every sequence number present on all streams, in increasing order;
// keeps the first of duplicated records; drops sequence numbers missing on
// any receiver. Output depends only on each stream's content, not on how
// producers interleave.
class Synchronizer {
 public:
  Synchronizer(std::vector<RecordSource> sources, SyncPolicy policy = {});

  // Throws StreamCorruptionError on a non-wrapping decrease, DataError when a
  // record's receiver_id does not match its stream.
  std::optional<AlignedSample> next();
  const SyncStats& stats() const { return stats_; }

 private:
  struct Head {
    std::uint64_t ext;
    CsiRecord record;
  };
  struct StreamState {
    RecordSource source;
    std::optional<std::uint64_t> last_ext;
    std::uint64_t epoch = 0;
    std::optional<Head> head;
    bool exhausted = false;
  };

  bool fill_head(std::size_t i);
  void record_drop(std::size_t i, std::uint64_t ext);
  void drain();

  SyncPolicy policy_;
  std::vector<StreamState> streams_;
  SyncStats stats_;
  std::set<std::uint64_t> recent_drops_;
  bool finished_ = false;
};

struct SyncResult {
  std::vector<AlignedSample> samples;
  SyncStats stats;
};

// Convenience wrapper over in-memory per-receiver streams.
SyncResult synchronize(std::span<const std::vector<CsiRecord>> streams, SyncPolicy policy = {});

// Splits a mixed record sequence into per-receiver streams, preserving order.
// Throws DataError for receiver ids >= receivers.
std::vector<std::vector<CsiRecord>> split_by_receiver(std::span<const CsiRecord> records,
                                                      std::size_t receivers);

// Bounded multi-producer hand-off: push blocks while full (back-pressure),
// pop blocks until a record arrives or the channel is closed and drained.
class RecordChannel {
 public:
  explicit RecordChannel(std::size_t capacity = 1024);
  void push(const CsiRecord& record);
  void close();
  std::optional<CsiRecord> pop();
  RecordSource source();

 private:
  std::size_t capacity_;
  std::deque<CsiRecord> queue_;
  bool closed_ = false;
  std::mutex mutex_;
  std::condition_variable not_empty_, not_full_;
};

}  // namespace wifisense::csi
