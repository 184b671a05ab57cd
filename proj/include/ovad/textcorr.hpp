// SPDX-License-Identifier: Apache-2.0
#pragma once

// Text-point correlation head. With T (m x D) the label embeddings and P
// (n x D) the point embeddings:
//
//   w_ij     = act(T_i . P_j)                                  correlation weights
//   That_i   = sum_j act(w_ij P_j) / sum_j w_ij                text attention features
//   A_ji     = cos(P_j, That_i)                                relevance
//   S_j      = softmax over labels of A_j / tau                per-point probabilities
//   L        = -sum_j omega[y_j] log S_j[y_j]                  weighted NLL
//
// ThatMode::weighted_mean replaces That_i by sum_j w_ij P_j / sum_j w_ij,
// and ThatMode::direct skips the correlation step and scores against T_i.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ovad/ndcore.hpp"
#include "ovad/pointcloud.hpp"

namespace ovad {

enum class Activation { sigmoid, relu, identity };
enum class ThatMode { literal, weighted_mean, direct };

const char* to_string(Activation activation);
Activation parse_activation(const std::string& text);
const char* to_string(ThatMode mode);
ThatMode parse_that_mode(const std::string& text);

double activate(Activation activation, double x);
/// Derivative of `activate` at x.
double activate_grad(Activation activation, double x);

/// Ordered affordance labels with one embedding row each.
struct TextBank {
  std::vector<std::string> labels;
  Matrix embeddings;  // m x D
  bool normalized = false;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return embeddings.cols(); }

  /// Labels unique and non-empty, one row per label, unit rows when normalized.
  void validate() const;
  std::optional<std::size_t> index_of(const std::string& label) const;
  /// Rows for `names`, in that order. ConfigError on unknown labels.
  TextBank select(std::span<const std::string> names) const;
};

inline constexpr int kTextBankFormatVersion = 1;

/// Writes `json_path` and its sibling with the ".bin" extension.
void save_textbank(const TextBank& bank, const std::filesystem::path& json_path);
/// Accepts the JSON path or a directory holding textbank.json.
TextBank load_textbank(const std::filesystem::path& path);

struct Temperature {
  static constexpr double kMin = 1e-3;
  double value = initial();

  /// ln(1 / 0.07).
  static double initial();
};

struct ClassWeights {
  std::vector<double> omega;

  void validate() const;
  static ClassWeights uniform(std::size_t m) { return {std::vector<double>(m, 1.0)}; }
};

struct TextHeadConfig {
  Activation activation = Activation::sigmoid;
  ThatMode that_mode = ThatMode::literal;
};

Matrix correlation_weights(const TextBank& text, const Matrix& embeddings, Activation activation);

/// DegenerateCorrelationError when a label's weight row sums to zero.
Matrix text_attention_features(const TextBank& text, const Matrix& embeddings,
                               const Matrix& weights, Activation activation,
                               ThatMode mode = ThatMode::literal);

/// n x m cosine scores. `degenerate`, when given, receives the number of
/// entries that involved a zero-norm operand.
Matrix relevance_matrix(const Matrix& embeddings, const Matrix& that,
                        std::size_t* degenerate = nullptr);

Matrix pointwise_softmax(const Matrix& relevance, Temperature tau);

double weighted_nll(const Matrix& probs, std::span<const LabelIndex> ground_truth,
                    const ClassWeights& weights);

/// Per-point argmax; ties resolve to the lowest label index.
std::vector<LabelIndex> predict(const Matrix& relevance);

/// Everything the point-wise loss needs for its backward pass.
struct TextHeadTrace {
  Matrix dots;                       // m x n, T_i . P_j
  Matrix weights;                    // m x n
  Matrix numerators;                 // m x D
  std::vector<double> weight_sums;   // m
  Matrix that;                       // m x D
  Matrix relevance;                  // n x m
  Matrix probs;                      // n x m
  std::size_t degenerate = 0;
};

TextHeadTrace text_head_forward(const TextBank& text, const Matrix& embeddings, Temperature tau,
                                const TextHeadConfig& config);

struct TextHeadGrads {
  Matrix d_embeddings;
  double d_tau = 0.0;
};

/// Gradient of weighted_nll(trace.probs, ...) with respect to the point
/// embeddings and the temperature.
TextHeadGrads point_wise_loss_backward(const TextHeadTrace& trace, const TextBank& text,
                                       const Matrix& embeddings, Temperature tau,
                                       const TextHeadConfig& config,
                                       std::span<const LabelIndex> ground_truth,
                                       const ClassWeights& weights);

}  // namespace ovad
