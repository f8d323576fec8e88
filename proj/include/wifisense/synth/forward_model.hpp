#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "wifisense/csi/record.hpp"
#include "wifisense/keypoints/skeleton.hpp"

namespace wifisense::synth {

inline constexpr std::size_t kSamplesPerFrame = 10;
inline constexpr std::size_t kFeatures = 4 * keypoints::kJoints;  // centered coords + velocity

struct ForwardModelConfig {
  std::uint64_t seed = 0;
  std::size_t receivers = 3;
  double gain = 3.0;
  double noise_sigma = 1.0;  // amplitude units before quantization
};

// Seeded smooth random map from skeleton state to per-receiver amplitudes:
//   a = 127.5 + 100 * tanh(gain * W_r f / sqrt(68) + b_r) + sigma * n
// rounded and clamped to 0..255, with f = [coords - 0.5, velocity].
// Synthetic stand-in only; it carries no propagation physics.
class CsiForwardModel {
 public:
  explicit CsiForwardModel(ForwardModelConfig config);

  const ForwardModelConfig& config() const { return config_; }

  std::array<std::uint8_t, csi::kSubcarriers> amplitudes(std::size_t receiver,
                                                         std::span<const double> features,
                                                         std::mt19937_64* noise) const;

  // Each frame becomes kSamplesPerFrame samples interpolated toward the next
  // frame. Returns one stream per receiver with consecutive seq numbers from
  // seq_start (mod 2^32).
  std::vector<std::vector<csi::CsiRecord>> render(std::span<const keypoints::Skeleton> frames,
                                                  std::uint32_t seq_start,
                                                  std::uint64_t noise_seed) const;

 private:
  ForwardModelConfig config_;
  std::vector<std::vector<double>> weights_;  // per receiver, 114 x 68 row-major
  std::vector<std::vector<double>> bias_;     // per receiver, 114
};

// f for frame t; velocity is the per-second displacement from frame t-1
// scaled by 1/3 (zero at t = 0).
std::array<double, kFeatures> skeleton_features(std::span<const keypoints::Skeleton> frames,
                                                std::size_t t);

// Receiver-interleaved record order: seq-major, receiver-minor.
std::vector<csi::CsiRecord> interleave(const std::vector<std::vector<csi::CsiRecord>>& streams);

}  // namespace wifisense::synth
