#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include "wifisense/keypoints/skeleton.hpp"
#include "wifisense/nn/tensor.hpp"

namespace wifisense::testing {

inline nn::Tensor random_tensor(nn::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                                double hi = 1.0, bool requires_grad = false) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(nn::numel(shape));
  for (auto& x : v) x = u(rng);
  return nn::Tensor::from(std::move(shape), std::move(v), requires_grad);
}

inline keypoints::Skeleton random_skeleton(std::mt19937_64& rng, std::size_t frame = 0) {
  std::uniform_real_distribution<double> u(0.05, 0.95);
  keypoints::Skeleton s;
  s.frame_index = frame;
  for (auto& k : s.keypoints) k = {u(rng), u(rng), true, false};
  return s;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("wifisense_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace wifisense::testing
