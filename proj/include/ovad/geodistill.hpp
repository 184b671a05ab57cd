// SPDX-License-Identifier: Apache-2.0
#pragma once

// Local geometric relation descriptors and the loss that transfers them
// from teacher to student. For anchor a with neighborhood N(a) of size K:
//
//   R_a = (1/K) sum_{k in N(a)} (p_k - p_a) ++ (P_k - P_a)
//
// i.e. the mean coordinate offset (3 columns) followed by the mean feature
// offset (D columns).

#include <string>

#include "ovad/ndcore.hpp"
#include "ovad/pointcloud.hpp"

namespace ovad {

enum class GeoNorm { mse, l2 };

const char* to_string(GeoNorm norm);
GeoNorm parse_geo_norm(const std::string& text);

struct RelationSet {
  Matrix descriptors;  // Z x (3 + D)
};

RelationSet relation_descriptors(const PointCloud& cloud, const Matrix& embeddings,
                                 const AnchorSet& anchors);

/// Accumulates dL/dP into `d_embeddings` (n x D) given dL/dR.
void relation_descriptors_backward(const AnchorSet& anchors, const Matrix& d_descriptors,
                                   Matrix& d_embeddings);

/// (1/Z) sum_a d(R_te^a, R_st^a) where d is the per-row mean squared
/// difference (GeoNorm::mse) or the row's Euclidean norm (GeoNorm::l2).
double geo_transfer_loss(const RelationSet& student, const RelationSet& teacher,
                         GeoNorm norm = GeoNorm::mse);

/// dL/dR_st. For the l2 form a row with zero difference has zero gradient.
Matrix geo_transfer_loss_grad(const RelationSet& student, const RelationSet& teacher,
                              GeoNorm norm = GeoNorm::mse);

}  // namespace ovad
