#include "wifisense/csi/sync.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "wifisense/error.hpp"

namespace wifisense::csi {

Synchronizer::Synchronizer(std::vector<RecordSource> sources, SyncPolicy policy)
    : policy_(policy) {
  if (sources.size() != policy.receivers) {
    throw ConfigError(fmt::format("synchronizer: {} streams for {} receivers", sources.size(),
                                  policy.receivers));
  }
  for (auto& s : sources) {
    StreamState state;
    state.source = std::move(s);
    streams_.push_back(std::move(state));
  }
  stats_.unmatched_records.assign(sources.size(), 0);
  stats_.duplicates.assign(sources.size(), 0);
  stats_.wraps.assign(sources.size(), 0);
}

// Reads until a non-duplicate record is available. Returns false at end of stream.
bool Synchronizer::fill_head(std::size_t i) {
  StreamState& s = streams_[i];
  if (s.head) return true;
  while (!s.exhausted) {
    std::optional<CsiRecord> rec = s.source();
    if (!rec) {
      s.exhausted = true;
      break;
    }
    if (rec->receiver_id != i) {
      throw DataError(fmt::format("record with receiver_id {} arrived on stream {}",
                                  rec->receiver_id, i));
    }
    std::uint64_t ext = (s.epoch << 32) | rec->seq;
    if (s.last_ext) {
      const std::uint32_t last_raw = static_cast<std::uint32_t>(*s.last_ext);
      if (ext < *s.last_ext) {
        if (static_cast<std::uint64_t>(last_raw - rec->seq) > policy_.wrap_threshold) {
          ++s.epoch;
          ++stats_.wraps[i];
          ext = (s.epoch << 32) | rec->seq;
        } else {
          throw StreamCorruptionError(
              static_cast<int>(i),
              fmt::format("receiver {}: sequence number went backwards ({} after {})", i,
                          rec->seq, last_raw));
        }
      } else if (ext == *s.last_ext) {
        ++stats_.duplicates[i];
        continue;
      }
    }
    s.last_ext = ext;
    s.head = Head{ext, *rec};
    return true;
  }
  return false;
}

void Synchronizer::record_drop(std::size_t i, std::uint64_t ext) {
  ++stats_.unmatched_records[i];
  if (recent_drops_.insert(ext).second) ++stats_.dropped_seqs;
  // A seq below every stream's latest read seq cannot be dropped again.
  std::uint64_t floor = UINT64_MAX;
  for (const auto& s : streams_) {
    if (!s.last_ext) return;
    floor = std::min(floor, *s.last_ext);
  }
  recent_drops_.erase(recent_drops_.begin(), recent_drops_.lower_bound(floor));
}

void Synchronizer::drain() {
  for (std::size_t i = 0; i < streams_.size(); ++i) {
    while (fill_head(i)) {
      record_drop(i, streams_[i].head->ext);
      streams_[i].head.reset();
    }
  }
  finished_ = true;
}

std::optional<AlignedSample> Synchronizer::next() {
  if (finished_) return std::nullopt;
  while (true) {
    for (std::size_t i = 0; i < streams_.size(); ++i) {
      if (!fill_head(i)) {
        drain();
        return std::nullopt;
      }
    }
    std::uint64_t target = 0;
    for (const auto& s : streams_) target = std::max(target, s.head->ext);
    bool aligned = true;
    for (std::size_t i = 0; i < streams_.size(); ++i) {
      if (streams_[i].head->ext < target) {
        aligned = false;
        record_drop(i, streams_[i].head->ext);
        streams_[i].head.reset();
      }
    }
    if (!aligned) continue;

    AlignedSample sample;
    sample.extended_seq = target;
    sample.seq = static_cast<std::uint32_t>(target);
    sample.receivers.resize(streams_.size());
    for (std::size_t i = 0; i < streams_.size(); ++i) {
      const auto& amps = streams_[i].head->record.amplitudes;
      for (std::size_t k = 0; k < kSubcarriers; ++k)
        sample.receivers[i][k] = normalize_amplitude(amps[k]);
      streams_[i].head.reset();
    }
    ++stats_.aligned;
    return sample;
  }
}

SyncResult synchronize(std::span<const std::vector<CsiRecord>> streams, SyncPolicy policy) {
  std::vector<RecordSource> sources;
  for (const auto& stream : streams) {
    sources.push_back([&stream, pos = std::size_t{0}]() mutable -> std::optional<CsiRecord> {
      if (pos >= stream.size()) return std::nullopt;
      return stream[pos++];
    });
  }
  Synchronizer sync(std::move(sources), policy);
  SyncResult result;
  while (auto s = sync.next()) result.samples.push_back(std::move(*s));
  result.stats = sync.stats();
  return result;
}

std::vector<std::vector<CsiRecord>> split_by_receiver(std::span<const CsiRecord> records,
                                                      std::size_t receivers) {
  std::vector<std::vector<CsiRecord>> out(receivers);
  for (const auto& r : records) {
    if (r.receiver_id >= receivers) {
      throw DataError(fmt::format("receiver_id {} outside 0..{}", r.receiver_id, receivers - 1));
    }
    out[r.receiver_id].push_back(r);
  }
  return out;
}

RecordChannel::RecordChannel(std::size_t capacity) : capacity_(std::max<std::size_t>(1, capacity)) {}

void RecordChannel::push(const CsiRecord& record) {
  std::unique_lock lock(mutex_);
  not_full_.wait(lock, [&] { return queue_.size() < capacity_ || closed_; });
  if (closed_) throw DataError("push on a closed record channel");
  queue_.push_back(record);
  not_empty_.notify_one();
}

void RecordChannel::close() {
  std::lock_guard lock(mutex_);
  closed_ = true;
  not_empty_.notify_all();
  not_full_.notify_all();
}

std::optional<CsiRecord> RecordChannel::pop() {
  std::unique_lock lock(mutex_);
  not_empty_.wait(lock, [&] { return !queue_.empty() || closed_; });
  if (queue_.empty()) return std::nullopt;
  CsiRecord r = queue_.front();
  queue_.pop_front();
  not_full_.notify_one();
  return r;
}

RecordSource RecordChannel::source() {
  return [this] { return pop(); };
}

}  // namespace wifisense::csi
