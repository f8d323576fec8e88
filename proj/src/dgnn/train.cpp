#include "wifisense/dgnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>

#include <fmt/format.h>

#include "wifisense/error.hpp"
#include "wifisense/nn/checkpoint.hpp"
#include "wifisense/nn/ops.hpp"

namespace wifisense::dgnn {

using nn::Tensor;

namespace {

std::string parameter_norms(const nn::ParamStore& store) {
  std::string out;
  for (const auto& p : store.parameters()) {
    double sq = 0.0;
    for (double v : p.tensor.data()) sq += v * v;
    out += fmt::format("\n  {} |w|={:.6g}", p.name, std::sqrt(sq));
  }
  return out;
}

}  // namespace

ActionTrainResult train_action(Dgnn& model, const std::vector<ActionWindow>& windows,
                               const ActionTrainConfig& config, std::ostream* log) {
  if (windows.empty()) throw DataError("action training set is empty");
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");
  for (const auto& w : windows)
    if (w.label < 0 || static_cast<std::size_t>(w.label) >= model.config().classes)
      throw DataError(fmt::format("label {} out of range for frame {}", w.label, w.last_frame));

  nn::ParamStore& store = model.params();
  nn::AdamState adam(store, config.adam);
  std::mt19937_64 order_rng(config.seed);
  std::mt19937_64 dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), 0);

  ActionTrainResult result;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), order_rng);
    double weighted = 0.0;
    std::size_t correct = 0, batch_no = 0;
    // A trailing singleton batch joins the previous one.
    std::vector<std::pair<std::size_t, std::size_t>> spans;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size)
      spans.emplace_back(start, std::min(order.size(), start + config.batch_size));
    if (spans.size() > 1 && spans.back().second - spans.back().first == 1) {
      spans[spans.size() - 2].second = spans.back().second;
      spans.pop_back();
    }
    for (const auto& [start, end] : spans) {
      std::vector<const ActionWindow*> batch;
      std::vector<int> labels;
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(&windows[order[i]]);
        labels.push_back(windows[order[i]].label);
      }
      store.zero_grad();
      const Tensor logits = model.forward(vertex_input(batch), {nn::Mode::train, &dropout_rng});
      const Tensor loss = nn::cross_entropy(logits, labels);
      const double value = loss.item();
      if (!std::isfinite(value)) {
        throw NumericError(fmt::format("non-finite loss {} at epoch {}, batch {}; parameter norms:{}",
                                       value, epoch, batch_no, parameter_norms(store)));
      }
      loss.backward();
      nn::adam_step(store, adam);
      weighted += value * static_cast<double>(batch.size());
      const auto lv = logits.data();
      const std::size_t k = model.config().classes;
      for (std::size_t b = 0; b < batch.size(); ++b)
        if (argmax(lv.subspan(b * k, k)) == labels[b]) ++correct;
      ++batch_no;
    }
    ActionEpochRecord rec{epoch, weighted / static_cast<double>(windows.size()),
                          static_cast<double>(correct) / static_cast<double>(windows.size())};
    if (log) *log << fmt::format("{},{:.10g},{:.6f}\n", rec.epoch, rec.loss, rec.accuracy);
    result.log.push_back(rec);
    if (epoch == 1 || rec.loss < result.best_loss) {
      result.best_loss = rec.loss;
      result.best_epoch = epoch;
      if (config.checkpoint) nn::save_checkpoint(*config.checkpoint, store);
    }
    if (config.stop && config.stop(result.log)) break;
  }
  return result;
}

std::vector<ActionPrediction> predict_actions(const Dgnn& model,
                                              const std::vector<ActionWindow>& windows,
                                              std::size_t batch_size) {
  nn::NoGradGuard no_grad;
  const std::size_t k = model.config().classes;
  if (k != kClasses) throw ConfigError("predict_actions requires a 4-class model");
  batch_size = std::max<std::size_t>(1, batch_size);
  std::vector<ActionPrediction> out;
  out.reserve(windows.size());
  for (std::size_t start = 0; start < windows.size(); start += batch_size) {
    std::vector<const ActionWindow*> batch;
    for (std::size_t i = start; i < std::min(windows.size(), start + batch_size); ++i)
      batch.push_back(&windows[i]);
    const Tensor logits = model.forward(vertex_input(batch), {nn::Mode::eval, nullptr});
    const auto lv = logits.data();
    for (std::size_t b = 0; b < batch.size(); ++b) {
      ActionPrediction p;
      p.frame = batch[b]->last_frame;
      p.label = batch[b]->label;
      std::copy_n(lv.begin() + b * k, k, p.scores.begin());
      p.predicted = argmax(p.scores);
      out.push_back(p);
    }
  }
  return out;
}

double accuracy(const std::vector<ActionPrediction>& predictions) {
  if (predictions.empty()) return 0.0;
  const auto hits = std::count_if(predictions.begin(), predictions.end(),
                                  [](const ActionPrediction& p) { return p.label == p.predicted; });
  return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

void write_predictions_csv(std::ostream& out, const std::vector<ActionPrediction>& predictions) {
  out << "frame,pred_class,score0,score1,score2,score3\n";
  for (const auto& p : predictions) {
    out << fmt::format("{},{},{:.9g},{:.9g},{:.9g},{:.9g}\n", p.frame, p.predicted, p.scores[0],
                       p.scores[1], p.scores[2], p.scores[3]);
  }
}

}  // namespace wifisense::dgnn
