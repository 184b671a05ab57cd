// SPDX-License-Identifier: Apache-2.0
#include "ovad/attndistill.hpp"

#include <cmath>

#include "ovad/error.hpp"
#include "ovad/rng.hpp"

namespace ovad {

void AttentionConfig::validate() const {
  if (query_size < 1) throw ConfigError("attention query_size must be >= 1");
  if (head_dim < 1) throw ConfigError("attention head_dim must be >= 1");
}

const char* to_string(DistillTarget target) {
  return target == DistillTarget::omega ? "omega" : "weights";
}

DistillTarget parse_distill_target(const std::string& text) {
  if (text == "omega") return DistillTarget::omega;
  if (text == "weights") return DistillTarget::weights;
  throw ConfigError("unknown distill_target: " + text);
}

ParamSet init_projector_weights(std::size_t input_dim, const AttentionConfig& config,
                                std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  const double limit = std::sqrt(6.0 / static_cast<double>(input_dim + config.head_dim));
  ParamSet params;
  for (const auto* name : {&kProjectorQuery, &kProjectorKey, &kProjectorValue}) {
    Matrix w(input_dim, config.head_dim);
    for (double& x : w.values()) x = rng.uniform(-limit, limit);
    params.add(*name, std::move(w));
  }
  return params;
}

void check_projector_weights(const ParamSet& weights, std::size_t input_dim,
                             const AttentionConfig& config) {
  for (const auto* name : {&kProjectorQuery, &kProjectorKey, &kProjectorValue}) {
    if (!weights.contains(*name)) throw ShapeMismatchError("missing projector tensor " + *name);
    const Matrix& w = weights.value(*name);
    if (w.rows() != input_dim || w.cols() != config.head_dim) {
      throw ShapeMismatchError(*name + " has shape " + w.shape_string() + ", expected " +
                               std::to_string(input_dim) + "x" + std::to_string(config.head_dim));
    }
  }
}

Qkv qkv_project(const Matrix& embeddings, const ParamSet& projector) {
  return {matmul(embeddings, projector.value(kProjectorQuery)),
          matmul(embeddings, projector.value(kProjectorKey)),
          matmul(embeddings, projector.value(kProjectorValue))};
}

AttentionMaps self_attention(const Matrix& query, const Matrix& key, const Matrix& value,
                             const AttentionConfig& config) {
  config.validate();
  if (query.cols() != key.cols() || key.rows() != value.rows()) {
    throw DimensionError("self_attention: incompatible Q " + query.shape_string() + ", K " +
                         key.shape_string() + ", V " + value.shape_string());
  }
  Matrix logits = matmul_nt(query, key);
  logits *= 1.0 / std::sqrt(static_cast<double>(config.query_size));
  AttentionMaps maps;
  maps.weights = softmax_rows(logits);
  maps.omega = matmul(maps.weights, value);
  return maps;
}

Qkv self_attention_backward(const Qkv& qkv, const AttentionMaps& maps, const Matrix& d_omega,
                            const Matrix& d_weights, const AttentionConfig& config) {
  Qkv grads;
  grads.value = matmul_tn(maps.weights, d_omega);
  Matrix d_attn = matmul_nt(d_omega, qkv.value);
  if (!d_weights.empty()) d_attn += d_weights;
  Matrix d_logits = softmax_rows_backward(maps.weights, d_attn);
  d_logits *= 1.0 / std::sqrt(static_cast<double>(config.query_size));
  grads.query = matmul(d_logits, qkv.key);
  grads.key = matmul_tn(d_logits, qkv.query);
  return grads;
}

void qkv_project_backward(const Matrix& embeddings, const Qkv& d_qkv, ParamSet& projector,
                          Matrix& d_embeddings) {
  projector.grad(kProjectorQuery) += matmul_tn(embeddings, d_qkv.query);
  projector.grad(kProjectorKey) += matmul_tn(embeddings, d_qkv.key);
  projector.grad(kProjectorValue) += matmul_tn(embeddings, d_qkv.value);
  d_embeddings += matmul_nt(d_qkv.query, projector.value(kProjectorQuery));
  d_embeddings += matmul_nt(d_qkv.key, projector.value(kProjectorKey));
  d_embeddings += matmul_nt(d_qkv.value, projector.value(kProjectorValue));
}

double attention_transfer_loss(const Matrix& student, const Matrix& teacher) {
  return mse(teacher, student);
}

Matrix attention_transfer_loss_grad(const Matrix& student, const Matrix& teacher) {
  if (!student.same_shape(teacher)) {
    throw DimensionError("attention maps differ in shape: " + student.shape_string() + " vs " +
                         teacher.shape_string());
  }
  Matrix grad(student.rows(), student.cols());
  if (student.size() == 0) return grad;
  const double scale = 2.0 / static_cast<double>(student.size());
  const auto s = student.values();
  const auto t = teacher.values();
  auto g = grad.values();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = scale * (s[i] - t[i]);
  return grad;
}

}  // namespace ovad
