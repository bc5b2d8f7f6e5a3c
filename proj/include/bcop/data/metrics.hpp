#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "bcop/data/manifest.hpp"

namespace bcop {

// Rows are the true class, columns the predicted class.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  void add(int truth, int predicted);
  std::uint64_t total() const;
  std::uint64_t row_sum(int truth) const;
  std::uint64_t column_sum(int predicted) const;
  std::uint64_t trace() const;
};

struct ClassificationMetrics {
  double accuracy = 0.0;
  std::uint64_t total = 0;
  // nullopt where the class has no samples (recall) or no predictions
  // (precision).
  std::array<std::optional<double>, kNumClasses> recall{};
  std::array<std::optional<double>, kNumClasses> precision{};
};

// Throws kEmptyDataset for an all-zero matrix.
ClassificationMetrics metrics_from_confusion(const ConfusionMatrix& m);

// {"classes": [...], "matrix": [[...]], "total": n, "accuracy": a,
//  "recall": [...], "precision": [...]}; missing rates are null.
std::string to_json(const ConfusionMatrix& m, const ClassificationMetrics& metrics);

}  // namespace bcop
