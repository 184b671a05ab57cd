// SPDX-License-Identifier: Apache-2.0
#include "ovad/textcorr.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "json.hpp"
#include "ovad/binio.hpp"
#include "ovad/error.hpp"

namespace ovad {

namespace fs = std::filesystem;

const char* to_string(Activation activation) {
  switch (activation) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::relu: return "relu";
    case Activation::identity: return "identity";
  }
  return "?";
}

Activation parse_activation(const std::string& text) {
  if (text == "sigmoid") return Activation::sigmoid;
  if (text == "relu") return Activation::relu;
  if (text == "identity") return Activation::identity;
  throw ConfigError("unknown activation: " + text);
}

const char* to_string(ThatMode mode) {
  switch (mode) {
    case ThatMode::literal: return "literal";
    case ThatMode::weighted_mean: return "weighted_mean";
    case ThatMode::direct: return "direct";
  }
  return "?";
}

ThatMode parse_that_mode(const std::string& text) {
  if (text == "literal") return ThatMode::literal;
  if (text == "weighted_mean") return ThatMode::weighted_mean;
  if (text == "direct") return ThatMode::direct;
  throw ConfigError("unknown that_mode: " + text);
}

double activate(Activation activation, double x) {
  switch (activation) {
    case Activation::sigmoid:
      return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
    case Activation::relu: return x > 0.0 ? x : 0.0;
    case Activation::identity: return x;
  }
  return x;
}

double activate_grad(Activation activation, double x) {
  switch (activation) {
    case Activation::sigmoid: {
      const double s = activate(Activation::sigmoid, x);
      return s * (1.0 - s);
    }
    case Activation::relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::identity: return 1.0;
  }
  return 1.0;
}

// ---------------------------------------------------------------------------
// TextBank

void TextBank::validate() const {
  if (labels.empty()) throw ConfigError("text bank needs at least one label");
  std::set<std::string> seen;
  for (const auto& l : labels) {
    if (l.empty()) throw ConfigError("text bank label must be non-empty");
    if (!seen.insert(l).second) throw ConfigError("duplicate text bank label: " + l);
  }
  if (embeddings.rows() != labels.size() || embeddings.cols() == 0) {
    throw DimensionError("text bank has " + std::to_string(labels.size()) +
                         " labels but embeddings " + embeddings.shape_string());
  }
  if (!embeddings.all_finite()) throw NumericError("text bank has non-finite embeddings");
  if (normalized) {
    for (std::size_t i = 0; i < embeddings.rows(); ++i) {
      if (std::abs(norm(embeddings.row(i)) - 1.0) > 1e-6) {
        throw ConfigError("text bank row for '" + labels[i] + "' is not unit norm");
      }
    }
  }
}

std::optional<std::size_t> TextBank::index_of(const std::string& label) const {
  const auto it = std::find(labels.begin(), labels.end(), label);
  if (it == labels.end()) return std::nullopt;
  return static_cast<std::size_t>(it - labels.begin());
}

TextBank TextBank::select(std::span<const std::string> names) const {
  TextBank out;
  out.normalized = normalized;
  out.embeddings = Matrix(names.size(), dim());
  for (std::size_t r = 0; r < names.size(); ++r) {
    const auto idx = index_of(names[r]);
    if (!idx) throw ConfigError("label '" + names[r] + "' is not in the text bank");
    out.labels.push_back(names[r]);
    const auto src = embeddings.row(*idx);
    std::copy(src.begin(), src.end(), out.embeddings.row(r).begin());
  }
  return out;
}

void save_textbank(const TextBank& bank, const fs::path& json_path) {
  bank.validate();
  fs::path bin_path = json_path;
  bin_path.replace_extension(".bin");
  nlohmann::json header = {{"format_version", kTextBankFormatVersion},
                           {"dim", bank.dim()},
                           {"labels", bank.labels},
                           {"normalized", bank.normalized},
                           {"embeddings_file", bin_path.filename().string()}};
  std::string payload;
  payload.reserve(bank.embeddings.size() * 4);
  for (const double x : bank.embeddings.values()) binio::append_f32(payload, x);
  binio::write_file(json_path, header.dump(2) + "\n");
  binio::write_file(bin_path, payload);
}

TextBank load_textbank(const fs::path& path) {
  const fs::path json_path = fs::is_directory(path) ? path / "textbank.json" : path;
  const std::string text = binio::read_file(json_path);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFileError("malformed text bank header " + json_path.string() + ": " + e.what());
  }
  try {
    if (header.at("format_version").get<int>() != kTextBankFormatVersion) {
      throw VersionMismatchError("text bank " + json_path.string() + " has format version " +
                                 header.at("format_version").dump());
    }
    TextBank bank;
    bank.labels = header.at("labels").get<std::vector<std::string>>();
    bank.normalized = header.at("normalized").get<bool>();
    const auto dim = header.at("dim").get<std::size_t>();
    const fs::path bin_path = json_path.parent_path() /
                              header.value("embeddings_file", json_path.stem().string() + ".bin");
    const std::string payload = binio::read_file(bin_path);
    const std::size_t expected = bank.labels.size() * dim * 4;
    if (payload.size() != expected) {
      throw ShapeMismatchError("text bank payload " + bin_path.string() + " has " +
                               std::to_string(payload.size()) + " bytes, expected " +
                               std::to_string(expected));
    }
    std::vector<double> values(bank.labels.size() * dim);
    const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = binio::read_f32(bytes + 4 * i);
    bank.embeddings = Matrix(bank.labels.size(), dim, std::move(values));
    // binary32 storage can move a unit row off unit norm by ~1e-7
    bank.validate();
    return bank;
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFileError("malformed text bank header " + json_path.string() + ": " + e.what());
  }
}

double Temperature::initial() { return std::log(1.0 / 0.07); }

void ClassWeights::validate() const {
  for (const double w : omega) {
    if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("class weights must be positive");
  }
}

// ---------------------------------------------------------------------------
// Forward operations

Matrix correlation_weights(const TextBank& text, const Matrix& embeddings, Activation activation) {
  if (text.dim() != embeddings.cols()) {
    throw DimensionError("text bank dim " + std::to_string(text.dim()) +
                         " does not match embedding dim " + std::to_string(embeddings.cols()));
  }
  Matrix w = matmul_nt(text.embeddings, embeddings);
  for (double& x : w.values()) x = activate(activation, x);
  return w;
}

Matrix text_attention_features(const TextBank& text, const Matrix& embeddings,
                               const Matrix& weights, Activation activation, ThatMode mode) {
  const std::size_t m = text.size();
  const std::size_t n = embeddings.rows();
  const std::size_t dim = embeddings.cols();
  if (mode == ThatMode::direct) return text.embeddings;
  if (weights.rows() != m || weights.cols() != n) {
    throw DimensionError("correlation weights " + weights.shape_string() + " do not fit " +
                         std::to_string(m) + " labels and " + std::to_string(n) + " points");
  }
  Matrix that(m, dim);
  for (std::size_t i = 0; i < m; ++i) {
    auto out = that.row(i);
    double total = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = weights(i, j);
      total += w;
      const auto p = embeddings.row(j);
      if (mode == ThatMode::literal) {
        for (std::size_t d = 0; d < dim; ++d) out[d] += activate(activation, w * p[d]);
      } else {
        for (std::size_t d = 0; d < dim; ++d) out[d] += w * p[d];
      }
    }
    if (total == 0.0) {
      throw DegenerateCorrelationError("correlation weights for label '" + text.labels[i] +
                                       "' sum to zero");
    }
    for (double& x : out) x /= total;
  }
  return that;
}

Matrix relevance_matrix(const Matrix& embeddings, const Matrix& that, std::size_t* degenerate) {
  if (embeddings.cols() != that.cols()) {
    throw DimensionError("relevance: embeddings " + embeddings.shape_string() +
                         " vs text features " + that.shape_string());
  }
  Matrix a(embeddings.rows(), that.rows());
  std::size_t bad = 0;
  for (std::size_t j = 0; j < embeddings.rows(); ++j) {
    for (std::size_t i = 0; i < that.rows(); ++i) {
      bool flag = false;
      a(j, i) = cosine(embeddings.row(j), that.row(i), &flag);
      bad += flag ? 1 : 0;
    }
  }
  if (degenerate != nullptr) *degenerate = bad;
  return a;
}

Matrix pointwise_softmax(const Matrix& relevance, Temperature tau) {
  if (!(tau.value > 0.0)) throw ConfigError("temperature must be positive");
  Matrix scaled = relevance;
  scaled *= 1.0 / tau.value;
  return softmax_rows(scaled);
}

double weighted_nll(const Matrix& probs, std::span<const LabelIndex> ground_truth,
                    const ClassWeights& weights) {
  if (ground_truth.size() != probs.rows()) {
    throw DimensionError("weighted_nll: " + std::to_string(ground_truth.size()) +
                         " labels for " + std::to_string(probs.rows()) + " points");
  }
  if (weights.omega.size() != probs.cols()) {
    throw DimensionError("weighted_nll: " + std::to_string(weights.omega.size()) +
                         " class weights for " + std::to_string(probs.cols()) + " labels");
  }
  // compensated (Neumaier) sum; the total grows with n while the terms stay O(1)
  double total = 0.0;
  double carry = 0.0;
  for (std::size_t j = 0; j < probs.rows(); ++j) {
    const LabelIndex y = ground_truth[j];
    if (y >= probs.cols()) {
      throw LabelError("label index " + std::to_string(y) + " out of range for " +
                       std::to_string(probs.cols()) + " labels");
    }
    const double term = -weights.omega[y] * std::log(std::max(probs(j, y), 1e-300));
    const double t = total + term;
    carry += std::abs(total) >= std::abs(term) ? (total - t) + term : (term - t) + total;
    total = t;
  }
  return total + carry;
}

std::vector<LabelIndex> predict(const Matrix& relevance) {
  std::vector<LabelIndex> out(relevance.rows(), 0);
  for (std::size_t j = 0; j < relevance.rows(); ++j) {
    const auto row = relevance.row(j);
    std::size_t best = 0;
    for (std::size_t i = 1; i < row.size(); ++i) {
      if (row[i] > row[best]) best = i;
    }
    out[j] = static_cast<LabelIndex>(best);
  }
  return out;
}

TextHeadTrace text_head_forward(const TextBank& text, const Matrix& embeddings, Temperature tau,
                                const TextHeadConfig& config) {
  if (text.dim() != embeddings.cols()) {
    throw DimensionError("text bank dim " + std::to_string(text.dim()) +
                         " does not match embedding dim " + std::to_string(embeddings.cols()));
  }
  TextHeadTrace trace;
  if (config.that_mode == ThatMode::direct) {
    trace.that = text.embeddings;
  } else {
    trace.dots = matmul_nt(text.embeddings, embeddings);
    trace.weights = trace.dots;
    for (double& x : trace.weights.values()) x = activate(config.activation, x);
    trace.that = text_attention_features(text, embeddings, trace.weights, config.activation,
                                         config.that_mode);
    trace.weight_sums.assign(text.size(), 0.0);
    for (std::size_t i = 0; i < text.size(); ++i) {
      for (const double w : trace.weights.row(i)) trace.weight_sums[i] += w;
    }
  }
  trace.relevance = relevance_matrix(embeddings, trace.that, &trace.degenerate);
  trace.probs = pointwise_softmax(trace.relevance, tau);
  return trace;
}

TextHeadGrads point_wise_loss_backward(const TextHeadTrace& trace, const TextBank& text,
                                       const Matrix& embeddings, Temperature tau,
                                       const TextHeadConfig& config,
                                       std::span<const LabelIndex> ground_truth,
                                       const ClassWeights& weights) {
  const std::size_t n = embeddings.rows();
  const std::size_t m = text.size();
  const std::size_t dim = embeddings.cols();
  TextHeadGrads grads{Matrix(n, dim), 0.0};

  // softmax over A / tau
  Matrix d_relevance(n, m);
  for (std::size_t j = 0; j < n; ++j) {
    const LabelIndex y = ground_truth[j];
    const double w = weights.omega[y];
    for (std::size_t i = 0; i < m; ++i) {
      const double dz = w * (trace.probs(j, i) - (i == y ? 1.0 : 0.0));
      d_relevance(j, i) = dz / tau.value;
      grads.d_tau -= dz * trace.relevance(j, i) / (tau.value * tau.value);
    }
  }

  // cosine
  Matrix d_that(m, dim);
  std::vector<double> p_norm(n);
  std::vector<double> t_norm(m);
  for (std::size_t j = 0; j < n; ++j) p_norm[j] = norm(embeddings.row(j));
  for (std::size_t i = 0; i < m; ++i) t_norm[i] = norm(trace.that.row(i));
  for (std::size_t j = 0; j < n; ++j) {
    if (p_norm[j] == 0.0) continue;
    const auto p = embeddings.row(j);
    auto dp = grads.d_embeddings.row(j);
    for (std::size_t i = 0; i < m; ++i) {
      if (t_norm[i] == 0.0) continue;
      const auto t = trace.that.row(i);
      const double g = d_relevance(j, i);
      const double inv = 1.0 / (p_norm[j] * t_norm[i]);
      const double c = dot(p, t) * inv;
      const double cp = c / (p_norm[j] * p_norm[j]);
      const double ct = c / (t_norm[i] * t_norm[i]);
      auto dt = d_that.row(i);
      for (std::size_t d = 0; d < dim; ++d) {
        dp[d] += g * (t[d] * inv - cp * p[d]);
        dt[d] += g * (p[d] * inv - ct * t[d]);
      }
    }
  }
  if (config.that_mode == ThatMode::direct) return grads;

  // That_i = N_i / s_i
  Matrix d_weights(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    const double s = trace.weight_sums[i];
    const auto dt = d_that.row(i);
    const double ds = -dot(dt, trace.that.row(i)) / s;
    for (std::size_t j = 0; j < n; ++j) {
      const double w = trace.weights(i, j);
      const auto p = embeddings.row(j);
      auto dp = grads.d_embeddings.row(j);
      double dw = ds;
      if (config.that_mode == ThatMode::literal) {
        for (std::size_t d = 0; d < dim; ++d) {
          const double dn = dt[d] / s;
          const double slope = activate_grad(config.activation, w * p[d]);
          dw += dn * slope * p[d];
          dp[d] += dn * slope * w;
        }
      } else {
        for (std::size_t d = 0; d < dim; ++d) {
          const double dn = dt[d] / s;
          dw += dn * p[d];
          dp[d] += dn * w;
        }
      }
      d_weights(i, j) = dw;
    }
  }

  // w_ij = act(T_i . P_j)
  for (std::size_t i = 0; i < m; ++i) {
    const auto t = text.embeddings.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      const double g = d_weights(i, j) * activate_grad(config.activation, trace.dots(i, j));
      if (g == 0.0) continue;
      auto dp = grads.d_embeddings.row(j);
      for (std::size_t d = 0; d < dim; ++d) dp[d] += g * t[d];
    }
  }
  return grads;
}

}  // namespace ovad
