// SPDX-License-Identifier: Apache-2.0
#pragma once

// Dense row-major matrices in double precision, the reductions the models
// need, named parameter sets with gradient accumulators, and a central
// finite-difference gradient checker.

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace ovad {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }
  std::string shape_string() const;
  bool all_finite() const;

  void fill(double value);
  Matrix& operator+=(const Matrix& other);
  Matrix& operator*=(double scale);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// a * b.
Matrix matmul(const Matrix& a, const Matrix& b);
/// transpose(a) * b without materializing the transpose.
Matrix matmul_tn(const Matrix& a, const Matrix& b);
/// a * transpose(b).
Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);
/// Vector-Jacobian product of softmax_rows: given S = softmax_rows(X) and
/// dL/dS, returns dL/dX.
Matrix softmax_rows_backward(const Matrix& probs, const Matrix& d_probs);

/// Mean of squared entry differences.
double mse(const Matrix& a, const Matrix& b);

double dot(std::span<const double> u, std::span<const double> v);
double norm(std::span<const double> u);

/// Cosine similarity clamped to [-1, 1]. A zero-norm operand yields 0; when
/// `degenerate` is non-null it is set to whether that happened.
double cosine(std::span<const double> u, std::span<const double> v, bool* degenerate = nullptr);

/// Named trainable tensors, each paired with a same-shaped gradient
/// accumulator. Iteration order is by name.
class ParamSet {
 public:
  struct Entry {
    Matrix value;
    Matrix grad;
    bool decay = true;  // receives weight decay in the optimizer
  };

  /// Throws ConfigError if `name` is already present.
  void add(const std::string& name, Matrix value, bool decay = true);

  bool contains(const std::string& name) const { return entries_.count(name) != 0; }
  const Matrix& value(const std::string& name) const;
  Matrix& value(const std::string& name);
  Matrix& grad(const std::string& name);
  const Matrix& grad(const std::string& name) const;
  const Entry& entry(const std::string& name) const;

  void zero_grad();
  std::size_t parameter_count() const;
  std::vector<std::string> names() const;

  auto begin() { return entries_.begin(); }
  auto end() { return entries_.end(); }
  auto begin() const { return entries_.begin(); }
  auto end() const { return entries_.end(); }
  std::size_t size() const { return entries_.size(); }

  /// Copy every entry from `other`; names must not collide.
  void merge(const ParamSet& other);

 private:
  std::map<std::string, Entry> entries_;
};

/// Scalar objective over a ParamSet. When `with_grad` is true it must
/// zero and then populate every gradient accumulator.
using Objective = std::function<double(ParamSet& params, bool with_grad)>;

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
  bool passed = false;
};

/// Compares analytic gradients against (f(x+h) - f(x-h)) / 2h for every
/// entry of every parameter. Relative error uses max(|a|, |n|, 1e-8) as the
/// denominator. Throws ProbeError on a non-finite probe.
GradCheckReport grad_check(const Objective& objective, ParamSet& params, double h = 1e-5,
                           double tol = 1e-4);

}  // namespace ovad
