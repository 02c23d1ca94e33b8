#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"
#include "mmhcan/precision.hpp"

MMHCAN_NAMESPACE_BEGIN

struct MetricsReport {
  std::size_t classes = 0;
  std::size_t total = 0;
  std::vector<std::size_t> confusion;  // classes x classes, row = true label
  std::vector<std::size_t> class_counts;
  double accuracy = 0;
  std::vector<double> precision, recall, f1;
  double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
  std::vector<std::optional<double>> class_auc;
  std::optional<double> auc;  // absent when fewer than two classes are present

  std::size_t cell(std::size_t truth, std::size_t pred) const {
    return confusion[truth * classes + pred];
  }
};

// `probs` is N x C row-major. Prediction is the argmax (first on ties).
// Precision of a never-predicted class is 0.
MetricsReport compute_metrics(std::span<const double> probs, std::span<const int> labels,
                              std::size_t classes);

// Mann-Whitney statistic with averaged ranks for ties.
std::optional<double> rank_auc(std::span<const double> scores, std::span<const bool> positive);

nlohmann::json to_json(const MetricsReport& m);
MetricsReport metrics_from_json(const nlohmann::json& j);
void write_confusion_csv(const MetricsReport& m, const std::filesystem::path& path);

MMHCAN_NAMESPACE_END
