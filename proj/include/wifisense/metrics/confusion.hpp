#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace wifisense::metrics {

inline constexpr std::size_t kActionClasses = 4;
inline constexpr int kFallClass = 3;

// Rows are targets, columns predictions.
struct ConfusionMatrix {
  std::array<std::array<std::size_t, kActionClasses>, kActionClasses> counts{};

  std::size_t total() const;
  std::size_t row_sum(std::size_t target) const;
  // Integer row percentages, round(count / row_sum * 100); 0 for an empty row.
  std::array<std::array<int, kActionClasses>, kActionClasses> row_percentages() const;
  // diagonal / row_sum * 100; NaN for an empty row.
  std::array<double, kActionClasses> per_class_accuracy() const;
  // Classes 0..2 merged as non-fall: (TP_fall + TN_nonfall) / N * 100.
  double binary_fall_accuracy() const;
  // 2x2 [non-fall, fall] counts.
  std::array<std::array<std::size_t, 2>, 2> binary_counts() const;
};

// Throws DataError on a length mismatch or a label outside 0..3.
ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> targets);

// Counts block, then percentage block, each with a header row.
std::string format_confusion_csv(const ConfusionMatrix& cm);
std::string format_confusion_table(const ConfusionMatrix& cm);

// One row per skeleton source with STAND/WALK/SQUAT/FALL accuracies to one decimal.
std::string format_accuracy_table(const std::vector<std::pair<std::string, ConfusionMatrix>>& rows);

}  // namespace wifisense::metrics
