// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace ovad {

/// Base of every error raised by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A configuration value is out of its legal range (r, k, preset names...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value produced during a forward or backward pass.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss while probing a perturbed parameter in grad_check.
class ProbeError : public Error {
 public:
  using Error::Error;
};

/// A text-attention feature has a zero weight sum.
class DegenerateCorrelationError : public Error {
 public:
  using Error::Error;
};

/// Label index out of range for the active label set.
class LabelError : public Error {
 public:
  using Error::Error;
};

/// Metrics requested over zero evaluated points.
class EmptyEvaluationError : public Error {
 public:
  using Error::Error;
};

/// Invalid shape-generator specification.
class SpecError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class MissingFileError : public IoError {
 public:
  using IoError::IoError;
};

class VersionMismatchError : public IoError {
 public:
  using IoError::IoError;
};

class ShapeMismatchError : public IoError {
 public:
  using IoError::IoError;
};

/// Truncated or malformed file content.
class CorruptFileError : public IoError {
 public:
  using IoError::IoError;
};

}  // namespace ovad
