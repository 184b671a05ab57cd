// SPDX-License-Identifier: Apache-2.0
#pragma once

// Per-point feature encoder shared by the student and the frozen teacher:
//
//   h_0 = xyz,  h_{l+1} = tanh(h_l W_l + b_l)      (shared per-point MLP)
//   g_i = h_L[i] ++ max_{j in knn(i)} h_L[j]       (neighborhood max-pool)
//   P_i = g_i W_head + b_head                      (linear head to D dims)
//
// Parameters live in a ParamSet under the "encoder." prefix.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "ovad/ndcore.hpp"
#include "ovad/pointcloud.hpp"

namespace ovad {

enum class ModelRole { student, teacher };

const char* to_string(ModelRole role);
ModelRole parse_model_role(const std::string& text);

struct EncoderConfig {
  std::size_t embed_dim = 32;
  std::vector<std::size_t> hidden_widths{32, 32};
  std::size_t neighborhood_k = 8;
  ModelRole role = ModelRole::student;

  void validate() const;
  /// Same family with doubled hidden widths and the teacher role.
  EncoderConfig teacher_variant() const;

  friend bool operator==(const EncoderConfig&, const EncoderConfig&) = default;
};

std::string encoder_weight_name(std::size_t layer);
std::string encoder_bias_name(std::size_t layer);
inline const std::string kEncoderHeadWeight = "encoder.head.weight";
inline const std::string kEncoderHeadBias = "encoder.head.bias";

/// Glorot-uniform weights in +-sqrt(6 / (fan_in + fan_out)), zero biases.
/// Biases are registered without weight decay.
ParamSet init_encoder_weights(const EncoderConfig& config, std::uint64_t seed);

/// Throws ShapeMismatchError if `weights` lacks an encoder tensor or one
/// has the wrong shape for `config`.
void check_encoder_weights(const ParamSet& weights, const EncoderConfig& config);

/// Intermediate values kept for the backward pass.
struct EncoderTrace {
  std::vector<Matrix> activations;         // [0] = coords, [l + 1] = tanh output of layer l
  Matrix features;                         // n x 2H: own features ++ pooled features
  std::vector<std::size_t> pool_source;    // n * H: neighbor index providing each max
};

Matrix encode(const PointCloud& cloud, const ParamSet& weights, const EncoderConfig& config);

/// `neighborhoods` must be knn_all(cloud, config.neighborhood_k); passing it
/// in lets callers cache it across epochs.
Matrix encode(const PointCloud& cloud, const ParamSet& weights, const EncoderConfig& config,
              const AnchorSet& neighborhoods, EncoderTrace* trace = nullptr);

/// Accumulates dL/dW for every encoder tensor into `params` given dL/dP.
void encode_backward(const EncoderTrace& trace, const Matrix& d_embeddings, ParamSet& params,
                     const EncoderConfig& config);

}  // namespace ovad
