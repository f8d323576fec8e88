#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wifisense/csi/window.hpp"
#include "wifisense/keypoints/skeleton.hpp"
#include "wifisense/nn/adam.hpp"
#include "wifisense/tednet/tednet.hpp"

namespace wifisense::tednet {

// Windows paired with the skeleton of each window's output frame.
struct PoseDataset {
  std::vector<csi::CsiWindow> windows;
  std::vector<keypoints::Skeleton> targets;

  std::size_t size() const { return windows.size(); }
};

// One line of the training log, `epoch,split,mse`.
struct EpochRecord {
  std::size_t epoch = 0;
  std::string split;
  double mse = 0.0;
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 512;
  nn::AdamConfig adam{};
  std::uint64_t seed = 0;
  bool shuffle = true;
  // Best (lowest) monitored MSE is written here when set.
  std::optional<std::filesystem::path> checkpoint;
  // Called after every epoch's records; returning true stops training.
  std::function<bool(const std::vector<EpochRecord>&)> stop;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_mse = 0.0;
};

// Epoch 0 is an evaluation pass before any update; later train records are
// the sample-weighted mean of the batch losses. When `validation` is given,
// its eval-mode MSE is logged as split "test" and monitored for the best
// checkpoint; otherwise the train loss is monitored. NaN or infinite loss
// throws NumericError naming the epoch, batch and parameter norms.
TrainResult train(TedNet& model, const PoseDataset& data, const TrainConfig& config,
                  const PoseDataset* validation = nullptr, std::ostream* log = nullptr);

// Eval-mode mean squared error over every coordinate of the dataset.
double evaluate_mse(const TedNet& model, const PoseDataset& data, std::size_t batch_size = 64);

// (B, joints, 2) targets for the given dataset indices.
nn::Tensor stack_targets(const PoseDataset& data, const std::vector<std::size_t>& indices);

void write_log_csv(std::ostream& out, const std::vector<EpochRecord>& log);

}  // namespace wifisense::tednet
