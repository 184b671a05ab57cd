// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "ovad/checkpoint.hpp"
#include "ovad/datagen.hpp"
#include "ovad/textcorr.hpp"

namespace ovad {

/// m x m counts; rows are ground truth, columns are predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(std::size_t classes)
      : classes_(classes), counts_(classes * classes, 0) {}

  std::size_t classes() const { return classes_; }
  std::uint64_t operator()(std::size_t truth, std::size_t pred) const {
    return counts_[truth * classes_ + pred];
  }
  std::uint64_t total() const;

  /// LabelError on an out-of-range index; DimensionError on length mismatch.
  void accumulate(std::span<const LabelIndex> truth, std::span<const LabelIndex> pred);
  void merge(const ConfusionMatrix& other);

  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;

 private:
  std::size_t classes_;
  std::vector<std::uint64_t> counts_;
};

struct Metrics {
  double miou = 0.0;
  double acc = 0.0;
  double macc = 0.0;
  // nullopt where the class is excluded from the mean (empty union / empty row)
  std::vector<std::optional<double>> class_iou;
  std::vector<std::optional<double>> class_acc;
};

/// EmptyEvaluationError when the matrix holds no points.
Metrics metrics(const ConfusionMatrix& conf);

/// Text-head settings recorded in a student checkpoint (defaults if absent).
TextHeadConfig head_config_from(const Checkpoint& student);

/// Encode, score against `text`, argmax.
std::vector<LabelIndex> predict_cloud(const PointCloud& cloud, const TextBank& text,
                                      const Checkpoint& student, const TextHeadConfig& head);

struct EvalReport {
  Metrics metrics;
  ConfusionMatrix confusion{0};
  std::vector<std::string> labels;
  std::size_t degenerate_scores = 0;
  nlohmann::json config;
};

/// Ground-truth indices are resolved by position in `text`, so the bank may
/// carry label strings never seen in training.
EvalReport evaluate(const Dataset& dataset, const TextBank& text, const Checkpoint& student,
                    const TextHeadConfig& head);

nlohmann::json to_json(const EvalReport& report);

}  // namespace ovad
