#include "wifisense/metrics/confusion.hpp"

#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "wifisense/error.hpp"

namespace wifisense::metrics {

namespace {
constexpr const char* kClassNames[] = {"STAND", "WALK", "SQUAT", "FALL"};
}

std::size_t ConfusionMatrix::total() const {
  std::size_t n = 0;
  for (std::size_t t = 0; t < kActionClasses; ++t) n += row_sum(t);
  return n;
}

std::size_t ConfusionMatrix::row_sum(std::size_t target) const {
  std::size_t n = 0;
  for (std::size_t c : counts.at(target)) n += c;
  return n;
}

std::array<std::array<int, kActionClasses>, kActionClasses> ConfusionMatrix::row_percentages()
    const {
  std::array<std::array<int, kActionClasses>, kActionClasses> out{};
  for (std::size_t t = 0; t < kActionClasses; ++t) {
    const std::size_t n = row_sum(t);
    if (n == 0) continue;
    for (std::size_t p = 0; p < kActionClasses; ++p)
      out[t][p] = static_cast<int>(
          std::lround(static_cast<double>(counts[t][p]) / static_cast<double>(n) * 100.0));
  }
  return out;
}

std::array<double, kActionClasses> ConfusionMatrix::per_class_accuracy() const {
  std::array<double, kActionClasses> out{};
  for (std::size_t t = 0; t < kActionClasses; ++t) {
    const std::size_t n = row_sum(t);
    out[t] = n ? 100.0 * static_cast<double>(counts[t][t]) / static_cast<double>(n)
               : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

std::array<std::array<std::size_t, 2>, 2> ConfusionMatrix::binary_counts() const {
  std::array<std::array<std::size_t, 2>, 2> out{};
  for (std::size_t t = 0; t < kActionClasses; ++t)
    for (std::size_t p = 0; p < kActionClasses; ++p)
      out[t == kFallClass][p == kFallClass] += counts[t][p];
  return out;
}

double ConfusionMatrix::binary_fall_accuracy() const {
  const auto b = binary_counts();
  const std::size_t n = total();
  if (n == 0) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * static_cast<double>(b[0][0] + b[1][1]) / static_cast<double>(n);
}

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> targets) {
  if (predictions.size() != targets.size()) {
    throw DataError(fmt::format("confusion: {} predictions but {} targets", predictions.size(),
                                targets.size()));
  }
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const int t = targets[i], p = predictions[i];
    if (t < 0 || t >= static_cast<int>(kActionClasses) || p < 0 ||
        p >= static_cast<int>(kActionClasses)) {
      throw DataError(fmt::format("confusion: label out of range at index {} (target {}, predicted {})",
                                  i, t, p));
    }
    ++cm.counts[t][p];
  }
  return cm;
}

std::string format_confusion_csv(const ConfusionMatrix& cm) {
  std::string out = "target,pred0,pred1,pred2,pred3\n";
  for (std::size_t t = 0; t < kActionClasses; ++t)
    out += fmt::format("{},{}\n", t, fmt::join(cm.counts[t], ","));
  const auto pct = cm.row_percentages();
  out += "target,pct0,pct1,pct2,pct3\n";
  for (std::size_t t = 0; t < kActionClasses; ++t)
    out += fmt::format("{},{}\n", t, fmt::join(pct[t], ","));
  return out;
}

std::string format_confusion_table(const ConfusionMatrix& cm) {
  const auto pct = cm.row_percentages();
  std::string out = fmt::format("{:<8}", "target");
  for (std::size_t p = 0; p < kActionClasses; ++p) out += fmt::format(" {:>12}", p);
  out += '\n';
  for (std::size_t t = 0; t < kActionClasses; ++t) {
    out += fmt::format("{:<8}", t);
    for (std::size_t p = 0; p < kActionClasses; ++p)
      out += fmt::format(" {:>12}", fmt::format("{} ({}%)", cm.counts[t][p], pct[t][p]));
    out += '\n';
  }
  out += fmt::format("binary fall accuracy {:.1f}\n", cm.binary_fall_accuracy());
  return out;
}

std::string format_accuracy_table(const std::vector<std::pair<std::string, ConfusionMatrix>>& rows) {
  std::size_t width = 8;
  for (const auto& r : rows) width = std::max(width, r.first.size());
  std::string out = fmt::format("{:<{}}", "", width);
  for (const char* n : kClassNames) out += fmt::format(" {:>6}", n);
  out += '\n';
  for (const auto& [name, cm] : rows) {
    out += fmt::format("{:<{}}", name, width);
    for (double a : cm.per_class_accuracy())
      out += std::isnan(a) ? fmt::format(" {:>6}", "n/a") : fmt::format(" {:>6.1f}", a);
    out += '\n';
  }
  return out;
}

}  // namespace wifisense::metrics
