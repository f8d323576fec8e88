#include "wifisense/csi/window.hpp"

#include "wifisense/error.hpp"

namespace wifisense::csi {

namespace {
void validate(const WindowConfig& c) {
  if (c.length == 0 || c.hop == 0) throw ConfigError("window length and hop must be >= 1");
}
}  // namespace

Windower::Windower(WindowConfig config) : config_(config) { validate(config_); }

std::optional<CsiWindow> Windower::push(const AlignedSample& sample) {
  if (skip_ > 0) {
    --skip_;
    return std::nullopt;
  }
  pending_.push_back(sample);
  if (pending_.size() < config_.length) return std::nullopt;

  CsiWindow window;
  window.frame_index = next_frame_++;
  window.first_seq = pending_.front().extended_seq;
  const std::size_t receivers = pending_.front().receivers.size();
  const std::size_t len = config_.length;
  for (std::size_t r = 0; r < receivers; ++r) {
    std::vector<double> values(kSubcarriers * len);
    for (std::size_t t = 0; t < len; ++t) {
      if (pending_[t].receivers.size() != receivers) {
        throw DataError("aligned samples disagree on receiver count");
      }
      for (std::size_t k = 0; k < kSubcarriers; ++k)
        values[k * len + t] = pending_[t].receivers[r][k];
    }
    window.receivers.push_back(nn::Tensor::from({1, kSubcarriers, len}, std::move(values)));
  }
  const std::size_t drop = std::min(config_.hop, pending_.size());
  pending_.erase(pending_.begin(), pending_.begin() + static_cast<long>(drop));
  skip_ = config_.hop - drop;
  return window;
}

std::vector<CsiWindow> make_windows(std::span<const AlignedSample> samples, WindowConfig config) {
  Windower windower(config);
  std::vector<CsiWindow> out;
  for (const auto& s : samples) {
    if (auto w = windower.push(s)) out.push_back(std::move(*w));
  }
  return out;
}

std::size_t window_count(std::size_t n, WindowConfig config) {
  validate(config);
  if (n < config.length) return 0;
  return (n - config.length) / config.hop + 1;
}

}  // namespace wifisense::csi
