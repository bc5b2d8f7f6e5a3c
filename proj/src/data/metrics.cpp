#include "bcop/data/metrics.hpp"

#include <json.hpp>

#include "bcop/error.hpp"

namespace bcop {

void ConfusionMatrix::add(int truth, int predicted) {
  if (truth < 0 || truth >= kNumClasses || predicted < 0 || predicted >= kNumClasses) {
    fail(ErrorCode::kInvalidArgument, "confusion matrix: class id out of range");
  }
  ++counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(predicted)];
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t t = 0;
  for (const auto& row : counts) {
    for (auto v : row) t += v;
  }
  return t;
}

std::uint64_t ConfusionMatrix::row_sum(int truth) const {
  std::uint64_t t = 0;
  for (auto v : counts.at(static_cast<std::size_t>(truth))) t += v;
  return t;
}

std::uint64_t ConfusionMatrix::column_sum(int predicted) const {
  std::uint64_t t = 0;
  for (const auto& row : counts) t += row.at(static_cast<std::size_t>(predicted));
  return t;
}

std::uint64_t ConfusionMatrix::trace() const {
  std::uint64_t t = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) t += counts[i][i];
  return t;
}

ClassificationMetrics metrics_from_confusion(const ConfusionMatrix& m) {
  ClassificationMetrics out;
  out.total = m.total();
  if (out.total == 0) fail(ErrorCode::kEmptyDataset, "metrics: confusion matrix is empty");
  out.accuracy = static_cast<double>(m.trace()) / static_cast<double>(out.total);
  for (int c = 0; c < kNumClasses; ++c) {
    const auto diag = static_cast<double>(m.counts[c][c]);
    if (const auto row = m.row_sum(c); row > 0) out.recall[c] = diag / static_cast<double>(row);
    if (const auto col = m.column_sum(c); col > 0) out.precision[c] = diag / static_cast<double>(col);
  }
  return out;
}

std::string to_json(const ConfusionMatrix& m, const ClassificationMetrics& metrics) {
  nlohmann::ordered_json j;
  j["classes"] = nlohmann::ordered_json::array();
  for (auto name : kClassNames) j["classes"].push_back(std::string(name));
  j["matrix"] = m.counts;
  j["total"] = metrics.total;
  j["accuracy"] = metrics.accuracy;
  auto rates = [](const auto& arr) {
    nlohmann::ordered_json a = nlohmann::ordered_json::array();
    for (const auto& v : arr) a.push_back(v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json());
    return a;
  };
  j["recall"] = rates(metrics.recall);
  j["precision"] = rates(metrics.precision);
  return j.dump(2);
}

}  // namespace bcop
