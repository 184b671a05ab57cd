// SPDX-License-Identifier: Apache-2.0
#include "ovad/ndcore.hpp"

#include <algorithm>
#include <cmath>

#include "ovad/error.hpp"

namespace ovad {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(what) + ": shape mismatch " + a.shape_string() + " vs " +
                         b.shape_string());
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("matrix data length " + std::to_string(data_.size()) +
                         " does not match " + shape_string());
  }
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("ragged initializer for matrix");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string Matrix::shape_string() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void Matrix::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_shape(*this, other, "matrix add");
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
  return *this;
}

Matrix& Matrix::operator*=(double scale) {
  for (double& x : data_) x *= scale;
  return *this;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + a.shape_string() + " by " +
                         b.shape_string());
  }
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto orow = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      const auto brow = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: cannot multiply transpose of " + a.shape_string() +
                         " by " + b.shape_string());
  }
  Matrix out(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto arow = a.row(k);
    const auto brow = b.row(k);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double aki = arow[i];
      auto orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aki * brow[j];
    }
  }
  return out;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: cannot multiply " + a.shape_string() +
                         " by transpose of " + b.shape_string());
  }
  Matrix out(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) out(i, j) = dot(a.row(i), b.row(j));
  }
  return out;
}

Matrix transpose(const Matrix& a) {
  Matrix out(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out(j, i) = a(i, j);
  }
  return out;
}

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto in = logits.row(i);
    auto o = out.row(i);
    if (in.empty()) continue;
    const double peak = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - peak);
      total += o[j];
    }
    for (double& x : o) x /= total;
  }
  return out;
}

Matrix softmax_rows_backward(const Matrix& probs, const Matrix& d_probs) {
  require_same_shape(probs, d_probs, "softmax_rows_backward");
  Matrix out(probs.rows(), probs.cols());
  for (std::size_t i = 0; i < probs.rows(); ++i) {
    const double inner = dot(probs.row(i), d_probs.row(i));
    for (std::size_t j = 0; j < probs.cols(); ++j) {
      out(i, j) = probs(i, j) * (d_probs(i, j) - inner);
    }
  }
  return out;
}

double mse(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "mse");
  if (a.size() == 0) return 0.0;
  const auto av = a.values();
  const auto bv = b.values();
  double total = 0.0;
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double d = av[i] - bv[i];
    total += d * d;
  }
  return total / static_cast<double>(av.size());
}

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw DimensionError("dot: length " + std::to_string(u.size()) + " vs " +
                         std::to_string(v.size()));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) total += u[i] * v[i];
  return total;
}

double norm(std::span<const double> u) { return std::sqrt(dot(u, u)); }

double cosine(std::span<const double> u, std::span<const double> v, bool* degenerate) {
  const double nu = norm(u);
  const double nv = norm(v);
  const bool zero = nu == 0.0 || nv == 0.0;
  if (degenerate != nullptr) *degenerate = zero;
  if (zero) return 0.0;
  return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

void ParamSet::add(const std::string& name, Matrix value, bool decay) {
  if (entries_.count(name) != 0) throw ConfigError("duplicate parameter name: " + name);
  Matrix grad(value.rows(), value.cols());
  entries_.emplace(name, Entry{std::move(value), std::move(grad), decay});
}

const ParamSet::Entry& ParamSet::entry(const std::string& name) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) throw ConfigError("unknown parameter: " + name);
  return it->second;
}

const Matrix& ParamSet::value(const std::string& name) const { return entry(name).value; }

Matrix& ParamSet::value(const std::string& name) {
  return const_cast<Entry&>(entry(name)).value;
}

Matrix& ParamSet::grad(const std::string& name) { return const_cast<Entry&>(entry(name)).grad; }

const Matrix& ParamSet::grad(const std::string& name) const { return entry(name).grad; }

void ParamSet::zero_grad() {
  for (auto& [name, e] : entries_) e.grad.fill(0.0);
}

std::size_t ParamSet::parameter_count() const {
  std::size_t total = 0;
  for (const auto& [name, e] : entries_) total += e.value.size();
  return total;
}

std::vector<std::string> ParamSet::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, e] : entries_) out.push_back(name);
  return out;
}

void ParamSet::merge(const ParamSet& other) {
  for (const auto& [name, e] : other.entries_) add(name, e.value, e.decay);
}

GradCheckReport grad_check(const Objective& objective, ParamSet& params, double h, double tol) {
  if (!(h > 0.0)) throw ConfigError("grad_check step must be positive");
  objective(params, true);
  std::map<std::string, Matrix> analytic;
  for (const auto& [name, e] : params) analytic.emplace(name, e.grad);

  GradCheckReport report;
  for (auto& [name, e] : params) {
    auto values = e.value.values();
    const auto grads = analytic.at(name).values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + h;
      const double up = objective(params, false);
      values[i] = saved - h;
      const double down = objective(params, false);
      values[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw ProbeError("non-finite loss while probing " + name + "[" + std::to_string(i) + "]");
      }
      const double numeric = (up - down) / (2.0 * h);
      const double denom = std::max({std::abs(grads[i]), std::abs(numeric), 1e-8});
      const double rel = std::abs(grads[i] - numeric) / denom;
      ++report.entries_checked;
      if (report.worst_param.empty() || rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = name;
        report.worst_index = i;
        report.worst_analytic = grads[i];
        report.worst_numeric = numeric;
      }
    }
  }
  // leave the accumulators holding the analytic gradient at the unperturbed point
  objective(params, true);
  report.passed = report.max_rel_error < tol;
  return report;
}

}  // namespace ovad
