// SPDX-License-Identifier: Apache-2.0
#include "ovad/encoder.hpp"

#include <cmath>

#include "ovad/error.hpp"
#include "ovad/rng.hpp"

namespace ovad {

namespace {

Matrix glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (double& x : w.values()) x = rng.uniform(-limit, limit);
  return w;
}

void add_bias(Matrix& m, const Matrix& bias) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    auto r = m.row(i);
    for (std::size_t j = 0; j < m.cols(); ++j) r[j] += bias(0, j);
  }
}

void require_finite(const Matrix& m, const std::string& layer) {
  if (!m.all_finite()) throw NumericError("non-finite activations in " + layer);
}

void expect_shape(const ParamSet& w, const std::string& name, std::size_t rows, std::size_t cols) {
  if (!w.contains(name)) throw ShapeMismatchError("missing encoder tensor " + name);
  const Matrix& m = w.value(name);
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeMismatchError(name + " has shape " + m.shape_string() + ", expected " +
                             std::to_string(rows) + "x" + std::to_string(cols));
  }
}

}  // namespace

const char* to_string(ModelRole role) {
  return role == ModelRole::student ? "student" : "teacher";
}

ModelRole parse_model_role(const std::string& text) {
  if (text == "student") return ModelRole::student;
  if (text == "teacher") return ModelRole::teacher;
  throw ConfigError("unknown model role: " + text);
}

void EncoderConfig::validate() const {
  if (embed_dim < 1) throw ConfigError("embed_dim must be >= 1");
  if (hidden_widths.empty()) throw ConfigError("encoder needs at least one hidden layer");
  for (const std::size_t w : hidden_widths) {
    if (w < 1) throw ConfigError("hidden widths must be >= 1");
  }
  if (neighborhood_k < 1) throw ConfigError("neighborhood_k must be >= 1");
}

EncoderConfig EncoderConfig::teacher_variant() const {
  EncoderConfig out = *this;
  for (std::size_t& w : out.hidden_widths) w *= 2;
  out.role = ModelRole::teacher;
  return out;
}

std::string encoder_weight_name(std::size_t layer) {
  return "encoder.layer" + std::to_string(layer) + ".weight";
}

std::string encoder_bias_name(std::size_t layer) {
  return "encoder.layer" + std::to_string(layer) + ".bias";
}

ParamSet init_encoder_weights(const EncoderConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  ParamSet params;
  std::size_t fan_in = 3;
  for (std::size_t l = 0; l < config.hidden_widths.size(); ++l) {
    const std::size_t width = config.hidden_widths[l];
    params.add(encoder_weight_name(l), glorot(fan_in, width, rng));
    params.add(encoder_bias_name(l), Matrix(1, width), false);
    fan_in = width;
  }
  params.add(kEncoderHeadWeight, glorot(2 * fan_in, config.embed_dim, rng));
  params.add(kEncoderHeadBias, Matrix(1, config.embed_dim), false);
  return params;
}

void check_encoder_weights(const ParamSet& weights, const EncoderConfig& config) {
  std::size_t fan_in = 3;
  for (std::size_t l = 0; l < config.hidden_widths.size(); ++l) {
    expect_shape(weights, encoder_weight_name(l), fan_in, config.hidden_widths[l]);
    expect_shape(weights, encoder_bias_name(l), 1, config.hidden_widths[l]);
    fan_in = config.hidden_widths[l];
  }
  expect_shape(weights, kEncoderHeadWeight, 2 * fan_in, config.embed_dim);
  expect_shape(weights, kEncoderHeadBias, 1, config.embed_dim);
}

Matrix encode(const PointCloud& cloud, const ParamSet& weights, const EncoderConfig& config) {
  return encode(cloud, weights, config, knn_all(cloud, config.neighborhood_k), nullptr);
}

Matrix encode(const PointCloud& cloud, const ParamSet& weights, const EncoderConfig& config,
              const AnchorSet& neighborhoods, EncoderTrace* trace) {
  config.validate();
  const std::size_t n = cloud.size();
  if (neighborhoods.count() != n || neighborhoods.k() != config.neighborhood_k) {
    throw DimensionError("encoder neighborhoods must cover all " + std::to_string(n) +
                         " points with k = " + std::to_string(config.neighborhood_k));
  }

  std::vector<Matrix> acts;
  acts.reserve(config.hidden_widths.size() + 1);
  acts.push_back(cloud.coords);
  for (std::size_t l = 0; l < config.hidden_widths.size(); ++l) {
    Matrix h = matmul(acts.back(), weights.value(encoder_weight_name(l)));
    add_bias(h, weights.value(encoder_bias_name(l)));
    for (double& x : h.values()) x = std::tanh(x);
    require_finite(h, "encoder layer " + std::to_string(l));
    acts.push_back(std::move(h));
  }

  const Matrix& last = acts.back();
  const std::size_t width = last.cols();
  Matrix features(n, 2 * width);
  std::vector<std::size_t> source(n * width);
  for (std::size_t i = 0; i < n; ++i) {
    auto f = features.row(i);
    const auto own = last.row(i);
    for (std::size_t c = 0; c < width; ++c) f[c] = own[c];
    const auto& nbrs = neighborhoods.neighbors[i];
    for (std::size_t c = 0; c < width; ++c) {
      std::size_t arg = nbrs.front();
      double best = last(arg, c);
      for (std::size_t q = 1; q < nbrs.size(); ++q) {
        const double v = last(nbrs[q], c);
        if (v > best) {
          best = v;
          arg = nbrs[q];
        }
      }
      f[width + c] = best;
      source[i * width + c] = arg;
    }
  }

  Matrix out = matmul(features, weights.value(kEncoderHeadWeight));
  add_bias(out, weights.value(kEncoderHeadBias));
  require_finite(out, "encoder head");

  if (trace != nullptr) {
    trace->activations = std::move(acts);
    trace->features = std::move(features);
    trace->pool_source = std::move(source);
  }
  return out;
}

void encode_backward(const EncoderTrace& trace, const Matrix& d_embeddings, ParamSet& params,
                     const EncoderConfig& config) {
  const std::size_t layers = config.hidden_widths.size();
  const std::size_t n = d_embeddings.rows();

  params.grad(kEncoderHeadWeight) += matmul_tn(trace.features, d_embeddings);
  Matrix& db_head = params.grad(kEncoderHeadBias);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d_embeddings.cols(); ++j) db_head(0, j) += d_embeddings(i, j);
  }

  const Matrix d_features = matmul_nt(d_embeddings, params.value(kEncoderHeadWeight));
  const std::size_t width = trace.activations.back().cols();
  Matrix d_act(n, width);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < width; ++c) {
      d_act(i, c) += d_features(i, c);
      d_act(trace.pool_source[i * width + c], c) += d_features(i, width + c);
    }
  }

  for (std::size_t l = layers; l-- > 0;) {
    const Matrix& out = trace.activations[l + 1];
    Matrix d_pre = d_act;
    auto dp = d_pre.values();
    const auto o = out.values();
    for (std::size_t i = 0; i < dp.size(); ++i) dp[i] *= 1.0 - o[i] * o[i];

    params.grad(encoder_weight_name(l)) += matmul_tn(trace.activations[l], d_pre);
    Matrix& db = params.grad(encoder_bias_name(l));
    for (std::size_t i = 0; i < d_pre.rows(); ++i) {
      for (std::size_t j = 0; j < d_pre.cols(); ++j) db(0, j) += d_pre(i, j);
    }
    if (l > 0) d_act = matmul_nt(d_pre, params.value(encoder_weight_name(l)));
  }
}

}  // namespace ovad
