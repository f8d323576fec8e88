#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <span>
#include <vector>

#include "wifisense/csi/sync.hpp"
#include "wifisense/nn/tensor.hpp"

namespace wifisense::csi {

struct WindowConfig {
  std::size_t length = 10;
  std::size_t hop = 10;
};

// Network input for one output frame: per receiver a (1, 114, length) tensor,
// subcarrier-major, samples in increasing seq order.
struct CsiWindow {
  std::size_t frame_index = 0;
  std::uint64_t first_seq = 0;
  std::vector<nn::Tensor> receivers;
};

// Streaming windower; trailing partial windows are never emitted.
class Windower {
 public:
  explicit Windower(WindowConfig config = {});
  std::optional<CsiWindow> push(const AlignedSample& sample);

 private:
  WindowConfig config_;
  std::deque<AlignedSample> pending_;
  std::size_t next_frame_ = 0;
  std::size_t skip_ = 0;
};

// Throws ConfigError when length or hop is zero.
std::vector<CsiWindow> make_windows(std::span<const AlignedSample> samples,
                                    WindowConfig config = {});

// Number of windows make_windows produces for n samples.
std::size_t window_count(std::size_t n, WindowConfig config = {});

}  // namespace wifisense::csi
