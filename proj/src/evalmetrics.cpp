// SPDX-License-Identifier: Apache-2.0
#include "ovad/evalmetrics.hpp"

#include "ovad/encoder.hpp"
#include "ovad/error.hpp"

namespace ovad {

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t sum = 0;
  for (const auto c : counts_) sum += c;
  return sum;
}

void ConfusionMatrix::accumulate(std::span<const LabelIndex> truth,
                                 std::span<const LabelIndex> pred) {
  if (truth.size() != pred.size()) {
    throw DimensionError("accumulate: " + std::to_string(truth.size()) + " labels vs " +
                         std::to_string(pred.size()) + " predictions");
  }
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth[i] >= classes_ || pred[i] >= classes_) {
      throw LabelError("label pair (" + std::to_string(truth[i]) + ", " +
                       std::to_string(pred[i]) + ") out of range for " +
                       std::to_string(classes_) + " classes");
    }
  }
  for (std::size_t i = 0; i < truth.size(); ++i) ++counts_[truth[i] * classes_ + pred[i]];
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.classes_ != classes_) throw DimensionError("merging confusion matrices of different size");
  for (std::size_t i = 0; i < counts_.size(); ++i) counts_[i] += other.counts_[i];
}

Metrics metrics(const ConfusionMatrix& conf) {
  const std::size_t m = conf.classes();
  const std::uint64_t total = conf.total();
  if (total == 0) throw EmptyEvaluationError("no points were evaluated");

  Metrics out;
  out.class_iou.resize(m);
  out.class_acc.resize(m);
  std::uint64_t trace = 0;
  double iou_sum = 0.0;
  double acc_sum = 0.0;
  std::size_t iou_count = 0;
  std::size_t acc_count = 0;
  for (std::size_t c = 0; c < m; ++c) {
    const std::uint64_t tp = conf(c, c);
    std::uint64_t row = 0;
    std::uint64_t col = 0;
    for (std::size_t k = 0; k < m; ++k) {
      row += conf(c, k);
      col += conf(k, c);
    }
    trace += tp;
    const std::uint64_t uni = row + col - tp;
    if (uni > 0) {
      out.class_iou[c] = static_cast<double>(tp) / static_cast<double>(uni);
      iou_sum += *out.class_iou[c];
      ++iou_count;
    }
    if (row > 0) {
      out.class_acc[c] = static_cast<double>(tp) / static_cast<double>(row);
      acc_sum += *out.class_acc[c];
      ++acc_count;
    }
  }
  out.acc = static_cast<double>(trace) / static_cast<double>(total);
  out.miou = iou_sum / static_cast<double>(iou_count);
  out.macc = acc_sum / static_cast<double>(acc_count);
  return out;
}

TextHeadConfig head_config_from(const Checkpoint& student) {
  TextHeadConfig head;
  if (student.meta.contains("head")) {
    const auto& h = student.meta.at("head");
    head.activation = parse_activation(h.value("activation", "sigmoid"));
    head.that_mode = parse_that_mode(h.value("that_mode", "literal"));
  }
  return head;
}

namespace {

Matrix score_cloud(const PointCloud& cloud, const TextBank& text, const Checkpoint& student,
                   const TextHeadConfig& head, std::size_t* degenerate) {
  const Matrix p = encode(cloud, student.params, student.encoder);
  const Matrix w = head.that_mode == ThatMode::direct
                       ? Matrix()
                       : correlation_weights(text, p, head.activation);
  const Matrix that = text_attention_features(text, p, w, head.activation, head.that_mode);
  return relevance_matrix(p, that, degenerate);
}

}  // namespace

std::vector<LabelIndex> predict_cloud(const PointCloud& cloud, const TextBank& text,
                                      const Checkpoint& student, const TextHeadConfig& head) {
  return predict(score_cloud(cloud, text, student, head, nullptr));
}

EvalReport evaluate(const Dataset& dataset, const TextBank& text, const Checkpoint& student,
                    const TextHeadConfig& head) {
  text.validate();
  if (text.dim() != student.encoder.embed_dim) {
    throw DimensionError("text bank dim " + std::to_string(text.dim()) +
                         " differs from checkpoint embed_dim " +
                         std::to_string(student.encoder.embed_dim));
  }
  EvalReport report;
  report.confusion = ConfusionMatrix(text.size());
  report.labels = text.labels;
  for (const auto& cloud : dataset.clouds) {
    if (!cloud.labels) throw ConfigError("evaluation dataset contains an unlabeled cloud");
    cloud.validate(text.size());
    std::size_t degenerate = 0;
    const Matrix a = score_cloud(cloud, text, student, head, &degenerate);
    report.degenerate_scores += degenerate;
    report.confusion.accumulate(*cloud.labels, predict(a));
  }
  report.metrics = metrics(report.confusion);
  report.config = {{"activation", to_string(head.activation)},
                   {"that_mode", to_string(head.that_mode)},
                   {"protocol", to_string(dataset.manifest.protocol)},
                   {"clouds", dataset.size()},
                   {"n_points", dataset.manifest.n_points},
                   {"encoder", to_json(student.encoder)}};
  return report;
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json classes = nlohmann::json::array();
  for (std::size_t c = 0; c < report.labels.size(); ++c) {
    const auto& iou = report.metrics.class_iou[c];
    const auto& acc = report.metrics.class_acc[c];
    classes.push_back({{"label", report.labels[c]},
                       {"iou", iou ? nlohmann::json(*iou) : nlohmann::json(nullptr)},
                       {"accuracy", acc ? nlohmann::json(*acc) : nlohmann::json(nullptr)}});
  }
  nlohmann::json confusion = nlohmann::json::array();
  for (std::size_t r = 0; r < report.confusion.classes(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < report.confusion.classes(); ++c) row.push_back(report.confusion(r, c));
    confusion.push_back(row);
  }
  return {{"miou", report.metrics.miou},
          {"acc", report.metrics.acc},
          {"macc", report.metrics.macc},
          {"per_class", classes},
          {"labels", report.labels},
          {"confusion", confusion},
          {"degenerate_scores", report.degenerate_scores},
          {"config", report.config}};
}

}  // namespace ovad
