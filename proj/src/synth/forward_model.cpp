#include "wifisense/synth/forward_model.hpp"

#include <algorithm>
#include <cmath>

#include "wifisense/error.hpp"
#include "wifisense/synth/motion.hpp"

namespace wifisense::synth {

using keypoints::kJoints;

CsiForwardModel::CsiForwardModel(ForwardModelConfig config) : config_(config) {
  if (config_.receivers == 0 || config_.receivers > 255) {
    throw ConfigError("forward model needs 1..255 receivers");
  }
  if (config_.noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");
  std::mt19937_64 rng(config_.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> offset(-0.5, 0.5);
  for (std::size_t r = 0; r < config_.receivers; ++r) {
    std::vector<double> w(csi::kSubcarriers * kFeatures);
    for (auto& v : w) v = normal(rng);
    std::vector<double> b(csi::kSubcarriers);
    for (auto& v : b) v = offset(rng);
    weights_.push_back(std::move(w));
    bias_.push_back(std::move(b));
  }
}

std::array<std::uint8_t, csi::kSubcarriers> CsiForwardModel::amplitudes(
    std::size_t receiver, std::span<const double> features, std::mt19937_64* noise) const {
  if (receiver >= config_.receivers) throw ConfigError("receiver index out of range");
  if (features.size() != kFeatures) throw DimensionError("forward model expects 68 features");
  const double norm = config_.gain / std::sqrt(static_cast<double>(kFeatures));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::array<std::uint8_t, csi::kSubcarriers> out{};
  const auto& w = weights_[receiver];
  for (std::size_t k = 0; k < csi::kSubcarriers; ++k) {
    double z = 0.0;
    for (std::size_t i = 0; i < kFeatures; ++i) z += w[k * kFeatures + i] * features[i];
    double a = 127.5 + 100.0 * std::tanh(norm * z + bias_[receiver][k]);
    if (noise && config_.noise_sigma > 0.0) a += config_.noise_sigma * normal(*noise);
    out[k] = static_cast<std::uint8_t>(std::clamp(std::round(a), 0.0, 255.0));
  }
  return out;
}

std::array<double, kFeatures> skeleton_features(std::span<const keypoints::Skeleton> frames,
                                                std::size_t t) {
  std::array<double, kFeatures> f{};
  const auto& cur = frames[t].keypoints;
  for (std::size_t j = 0; j < kJoints; ++j) {
    f[2 * j] = cur[j].x - 0.5;
    f[2 * j + 1] = cur[j].y - 0.5;
    if (t > 0) {
      const auto& prev = frames[t - 1].keypoints[j];
      f[2 * kJoints + 2 * j] = (cur[j].x - prev.x) * kFrameRate / 3.0;
      f[2 * kJoints + 2 * j + 1] = (cur[j].y - prev.y) * kFrameRate / 3.0;
    }
  }
  return f;
}

std::vector<std::vector<csi::CsiRecord>> CsiForwardModel::render(
    std::span<const keypoints::Skeleton> frames, std::uint32_t seq_start,
    std::uint64_t noise_seed) const {
  std::mt19937_64 noise(noise_seed);
  std::vector<std::vector<csi::CsiRecord>> streams(config_.receivers);
  for (auto& s : streams) s.reserve(frames.size() * kSamplesPerFrame);
  std::uint32_t seq = seq_start;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto a = skeleton_features(frames, t);
    const auto b = t + 1 < frames.size() ? skeleton_features(frames, t + 1) : a;
    for (std::size_t s = 0; s < kSamplesPerFrame; ++s, ++seq) {
      const double w = static_cast<double>(s) / static_cast<double>(kSamplesPerFrame);
      std::array<double, kFeatures> f;
      for (std::size_t i = 0; i < kFeatures; ++i) f[i] = a[i] + w * (b[i] - a[i]);
      for (std::size_t r = 0; r < config_.receivers; ++r) {
        csi::CsiRecord rec;
        rec.receiver_id = static_cast<std::uint8_t>(r);
        rec.seq = seq;
        rec.amplitudes = amplitudes(r, f, &noise);
        streams[r].push_back(rec);
      }
    }
  }
  return streams;
}

std::vector<csi::CsiRecord> interleave(const std::vector<std::vector<csi::CsiRecord>>& streams) {
  std::vector<csi::CsiRecord> out;
  std::size_t longest = 0;
  for (const auto& s : streams) longest = std::max(longest, s.size());
  for (std::size_t i = 0; i < longest; ++i)
    for (const auto& s : streams)
      if (i < s.size()) out.push_back(s[i]);
  return out;
}

}  // namespace wifisense::synth
