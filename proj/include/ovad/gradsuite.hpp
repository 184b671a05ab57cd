// SPDX-License-Identifier: Apache-2.0
#pragma once

// Finite-difference checks of every loss term with respect to every
// trainable student tensor, on a small synthetic instance.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "ovad/attndistill.hpp"
#include "ovad/geodistill.hpp"
#include "ovad/ndcore.hpp"
#include "ovad/textcorr.hpp"

namespace ovad {

struct GradSuiteOptions {
  std::uint64_t seed = 0;
  std::size_t points = 32;
  std::size_t embed_dim = 8;
  std::size_t head_dim = 8;
  std::size_t labels = 4;
  double h = 1e-5;
  double tol = 1e-4;
  Activation activation = Activation::sigmoid;
  ThatMode that_mode = ThatMode::literal;
  GeoNorm geo_norm = GeoNorm::mse;
  DistillTarget distill_target = DistillTarget::omega;
};

struct GradSuiteResult {
  std::vector<std::pair<std::string, GradCheckReport>> checks;  // loss name -> report
  double max_rel_error = 0.0;
  bool passed = false;
};

/// Checks L_geo_transfer, L_att_transfer, L_point_wise and L_total.
GradSuiteResult run_gradient_suite(const GradSuiteOptions& options);

nlohmann::json to_json(const GradSuiteResult& result, double tol);

}  // namespace ovad
