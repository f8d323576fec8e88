#include "wifisense/tednet/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "wifisense/error.hpp"
#include "wifisense/nn/checkpoint.hpp"
#include "wifisense/nn/ops.hpp"

namespace wifisense::tednet {

using nn::Tensor;

Tensor stack_targets(const PoseDataset& data, const std::vector<std::size_t>& indices) {
  std::vector<double> values;
  values.reserve(indices.size() * keypoints::kJoints * 2);
  for (std::size_t i : indices) {
    for (const auto& k : data.targets[i].keypoints) {
      values.push_back(k.x);
      values.push_back(k.y);
    }
  }
  return Tensor::from({indices.size(), keypoints::kJoints, 2}, std::move(values));
}

namespace {

std::vector<const csi::CsiWindow*> gather(const PoseDataset& data,
                                          const std::vector<std::size_t>& indices) {
  std::vector<const csi::CsiWindow*> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(&data.windows[i]);
  return out;
}

std::string parameter_norms(const nn::ParamStore& store) {
  std::string out;
  for (const auto& p : store.parameters()) {
    double sq = 0.0;
    for (double v : p.tensor.data()) sq += v * v;
    out += fmt::format("\n  {} |w|={:.6g}", p.name, std::sqrt(sq));
  }
  return out;
}

void check_dataset(const TedNet& model, const PoseDataset& data, const char* what) {
  if (data.size() == 0) throw DataError(fmt::format("{} pose dataset is empty", what));
  if (data.targets.size() != data.windows.size()) {
    throw DataError(fmt::format("{} pose dataset has {} windows but {} targets", what,
                                data.windows.size(), data.targets.size()));
  }
  if (model.config().joints != keypoints::kJoints) {
    throw ConfigError("pose training requires a 17-joint model");
  }
}

}  // namespace

double evaluate_mse(const TedNet& model, const PoseDataset& data, std::size_t batch_size) {
  check_dataset(model, data, "evaluation");
  nn::NoGradGuard no_grad;
  batch_size = std::max<std::size_t>(1, batch_size);
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    std::vector<std::size_t> idx(std::min(batch_size, data.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const Tensor pred = model.forward(stack_windows(gather(data, idx)), {nn::Mode::eval, nullptr});
    const Tensor target = stack_targets(data, idx);
    const auto p = pred.data(), t = target.data();
    for (std::size_t i = 0; i < p.size(); ++i) total += (p[i] - t[i]) * (p[i] - t[i]);
    count += p.size();
  }
  return total / static_cast<double>(count);
}

void write_log_csv(std::ostream& out, const std::vector<EpochRecord>& log) {
  for (const auto& r : log) out << fmt::format("{},{},{:.10g}\n", r.epoch, r.split, r.mse);
}

TrainResult train(TedNet& model, const PoseDataset& data, const TrainConfig& config,
                  const PoseDataset* validation, std::ostream* log) {
  check_dataset(model, data, "training");
  if (validation) check_dataset(model, *validation, "validation");
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");

  TrainResult result;
  nn::ParamStore& store = model.params();
  nn::AdamState adam(store, config.adam);
  std::mt19937_64 order_rng(config.seed);
  std::mt19937_64 dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  auto emit = [&](EpochRecord r) {
    if (log) write_log_csv(*log, {r});
    result.log.push_back(std::move(r));
  };
  auto monitor = [&](std::size_t epoch, double train_mse) {
    double watched = train_mse;
    if (validation) {
      watched = evaluate_mse(model, *validation);
      emit({epoch, "test", watched});
    }
    if (epoch == 0 || watched < result.best_mse) {
      result.best_mse = watched;
      result.best_epoch = epoch;
      if (config.checkpoint) nn::save_checkpoint(*config.checkpoint, store);
    }
  };

  emit({0, "train", evaluate_mse(model, data)});
  monitor(0, result.log.back().mse);
  if (config.stop && config.stop(result.log)) return result;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), order_rng);
    double weighted = 0.0;
    std::size_t batch_no = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_no) {
      const std::vector<std::size_t> idx(
          order.begin() + start,
          order.begin() + std::min(order.size(), start + config.batch_size));
      store.zero_grad();
      const Tensor pred =
          model.forward(stack_windows(gather(data, idx)), {nn::Mode::train, &dropout_rng});
      const Tensor loss = nn::mse_loss(pred, stack_targets(data, idx));
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericError(fmt::format("non-finite loss {} at epoch {}, batch {}; parameter norms:{}",
                                       value, epoch, batch_no, parameter_norms(store)));
      }
      loss.backward();
      nn::adam_step(store, adam);
      weighted += value * static_cast<double>(idx.size());
    }
    const double train_mse = weighted / static_cast<double>(data.size());
    emit({epoch, "train", train_mse});
    monitor(epoch, train_mse);
    result.epochs_run = epoch;
    if (config.stop && config.stop(result.log)) break;
  }
  return result;
}

}  // namespace wifisense::tednet
