#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "wifisense/dgnn/dgnn.hpp"
#include "wifisense/nn/adam.hpp"

namespace wifisense::dgnn {

struct ActionEpochRecord {
  std::size_t epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;  // training accuracy of the epoch's batches, train mode
};

struct ActionTrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  nn::AdamConfig adam{};
  std::uint64_t seed = 0;
  bool shuffle = true;
  std::optional<std::filesystem::path> checkpoint;  // lowest-loss epoch
  std::function<bool(const std::vector<ActionEpochRecord>&)> stop;
};

struct ActionTrainResult {
  std::vector<ActionEpochRecord> log;
  std::size_t best_epoch = 0;
  double best_loss = 0.0;
};

// Cross-entropy with Adam. Log lines are `epoch,loss,accuracy`. Non-finite
// loss throws NumericError naming the epoch, batch and parameter norms.
ActionTrainResult train_action(Dgnn& model, const std::vector<ActionWindow>& windows,
                               const ActionTrainConfig& config, std::ostream* log = nullptr);

struct ActionPrediction {
  std::size_t frame = 0;
  int label = 0;
  int predicted = 0;
  std::array<double, kClasses> scores{};
};

// Eval-mode predictions in window order.
std::vector<ActionPrediction> predict_actions(const Dgnn& model,
                                              const std::vector<ActionWindow>& windows,
                                              std::size_t batch_size = 64);

double accuracy(const std::vector<ActionPrediction>& predictions);

// `frame,pred_class,score0,score1,score2,score3`.
void write_predictions_csv(std::ostream& out, const std::vector<ActionPrediction>& predictions);

}  // namespace wifisense::dgnn
