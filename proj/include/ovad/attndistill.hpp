// SPDX-License-Identifier: Apache-2.0
#pragma once

// Cross-attention projector and single-head self-attention over point
// features, plus the attention-transfer loss between teacher and student:
//
//   Q = P W_Q,  K = P W_K,  V = P W_V          (W_* are D x d_h)
//   Omega = softmax_rows(Q K^T / sqrt(d)) V
//
// Projector tensors live under the "projector." prefix.

#include <cstddef>
#include <cstdint>
#include <string>

#include "ovad/ndcore.hpp"

namespace ovad {

struct AttentionConfig {
  std::size_t query_size = 16;  // d in the sqrt(d) logit divisor
  std::size_t head_dim = 16;    // d_h, columns of Q, K, V

  void validate() const;
  friend bool operator==(const AttentionConfig&, const AttentionConfig&) = default;
};

/// Which attention quantity the transfer loss compares.
enum class DistillTarget { omega, weights };

const char* to_string(DistillTarget target);
DistillTarget parse_distill_target(const std::string& text);

inline const std::string kProjectorQuery = "projector.query";
inline const std::string kProjectorKey = "projector.key";
inline const std::string kProjectorValue = "projector.value";

ParamSet init_projector_weights(std::size_t input_dim, const AttentionConfig& config,
                                std::uint64_t seed);
void check_projector_weights(const ParamSet& weights, std::size_t input_dim,
                             const AttentionConfig& config);

struct Qkv {
  Matrix query;
  Matrix key;
  Matrix value;
};

Qkv qkv_project(const Matrix& embeddings, const ParamSet& projector);

struct AttentionMaps {
  Matrix weights;  // n x n, rows sum to 1
  Matrix omega;    // n x d_h
};

AttentionMaps self_attention(const Matrix& query, const Matrix& key, const Matrix& value,
                             const AttentionConfig& config);

/// Vector-Jacobian product of self_attention. `d_weights` may be empty when
/// only Omega feeds the loss.
Qkv self_attention_backward(const Qkv& qkv, const AttentionMaps& maps, const Matrix& d_omega,
                            const Matrix& d_weights, const AttentionConfig& config);

/// Accumulates projector gradients into `projector` and adds dL/dP to
/// `d_embeddings`.
void qkv_project_backward(const Matrix& embeddings, const Qkv& d_qkv, ParamSet& projector,
                          Matrix& d_embeddings);

/// MSE between the two attention quantities; the teacher side is a constant.
double attention_transfer_loss(const Matrix& student, const Matrix& teacher);
Matrix attention_transfer_loss_grad(const Matrix& student, const Matrix& teacher);

}  // namespace ovad
