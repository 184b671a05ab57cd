// SPDX-License-Identifier: Apache-2.0
#pragma once

// Loss composition, Adam with decoupled weight decay, and the training loop.
//
//   L_total = L_point_wise + lambda_a * L_att_transfer + lambda_t * L_geo_transfer
//
// The student ParamSet holds the encoder ("encoder.*"), the projector
// ("projector.*") and the temperature ("tau", 1 x 1). The teacher checkpoint
// and the text bank are read-only.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "ovad/attndistill.hpp"
#include "ovad/checkpoint.hpp"
#include "ovad/datagen.hpp"
#include "ovad/encoder.hpp"
#include "ovad/geodistill.hpp"
#include "ovad/textcorr.hpp"

namespace ovad {

inline const std::string kTemperatureParam = "tau";

struct TrainConfig {
  double lambda_a = 0.9;
  double lambda_t = 0.7;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  std::size_t epochs = 20;
  std::size_t batch_size = 4;
  std::uint64_t seed = 0;
  double r = 0.25;       // anchor ratio for FPS
  std::size_t k = 16;    // neighbors per anchor
  Activation activation = Activation::sigmoid;
  GeoNorm geo_norm = GeoNorm::mse;
  DistillTarget distill_target = DistillTarget::omega;
  ThatMode that_mode = ThatMode::literal;
  EncoderConfig student;
  AttentionConfig attention;

  void validate() const;
  TextHeadConfig head() const { return {activation, that_mode}; }
};

nlohmann::json to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

/// Named bundles of defaults: "desk" (n = 256, D = 32) and "paper"
/// (n = 2048, D = 512, 200 epochs, batch 16).
struct Preset {
  std::string name;
  std::size_t n_points = 256;
  TrainConfig train;
};

Preset preset(const std::string& name);

struct AdamState {
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEpsilon = 1e-8;

  std::map<std::string, Matrix> first;
  std::map<std::string, Matrix> second;
  std::uint64_t step = 0;
};

/// One Adam update with bias correction. Entries flagged for decay first get
/// theta -= lr * weight_decay * theta. "tau" is clamped to Temperature::kMin
/// afterwards. NumericError on a non-finite gradient.
void adam_step(ParamSet& params, AdamState& state, double lr, double weight_decay);

struct LossComponents {
  double total = 0.0;
  double point_wise = 0.0;
  double att_transfer = 0.0;
  double geo_transfer = 0.0;
};

/// Coordinate-only and teacher-side quantities; fixed for a given cloud.
struct CloudCache {
  AnchorSet anchors;
  AnchorSet student_neighborhoods;
  RelationSet teacher_relations;
  AttentionMaps teacher_attention;
};

CloudCache prepare_cloud(const PointCloud& cloud, const Checkpoint& teacher,
                         const TrainConfig& config);

struct CloudPass {
  LossComponents loss;
  std::vector<LabelIndex> predictions;
};

/// Full forward pass for one labeled cloud. With `with_grad`, adds
/// grad_scale * dL_total/dtheta into the student's accumulators (no zeroing).
CloudPass total_loss(const PointCloud& cloud, const CloudCache& cache, const TextBank& text,
                     ParamSet& student, const TrainConfig& config, const ClassWeights& weights,
                     bool with_grad, double grad_scale = 1.0);

/// Convenience form that builds the cache from the teacher.
LossComponents total_loss(const PointCloud& cloud, const TextBank& text, const Checkpoint& teacher,
                          ParamSet& student, const TrainConfig& config,
                          const ClassWeights& weights);

/// omega_c = N_total / (m * N_c); classes with no points get 1.
ClassWeights class_weights(const Dataset& dataset, std::size_t m);

/// Fresh student parameters for `config` (encoder, projector, tau).
ParamSet init_student(const TrainConfig& config);

/// Wraps student parameters and config into a checkpoint whose meta echoes
/// the training config and the text-head settings.
Checkpoint make_student_checkpoint(const ParamSet& params, const TrainConfig& config,
                                   const TextBank& text);

struct EpochRecord {
  std::size_t epoch = 0;
  LossComponents loss;  // mean over clouds, each measured before its batch's step
  double train_accuracy = 0.0;
  double tau = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
};

nlohmann::json to_json(const EpochRecord& record);
/// One JSON object per line.
std::string report_jsonl(const TrainReport& report);

struct TrainResult {
  Checkpoint student;
  TrainReport report;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

TrainResult train(const Dataset& dataset, const TextBank& text, const Checkpoint& teacher,
                  const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Mean per-cloud losses and point accuracy of `student` over the dataset.
struct DatasetLoss {
  LossComponents loss;
  double accuracy = 0.0;
};

DatasetLoss dataset_loss(const Dataset& dataset, const TextBank& text, const Checkpoint& teacher,
                         const ParamSet& student, const TrainConfig& config);

/// Teacher fixture: the student family at twice the hidden width with the
/// same embed_dim and projector shape, seeded weights.
Checkpoint make_teacher(const TrainConfig& config, std::uint64_t seed);

}  // namespace ovad
