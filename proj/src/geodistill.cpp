// SPDX-License-Identifier: Apache-2.0
#include "ovad/geodistill.hpp"

#include <cmath>

#include "ovad/error.hpp"

namespace ovad {

namespace {

void require_same(const RelationSet& a, const RelationSet& b) {
  if (!a.descriptors.same_shape(b.descriptors)) {
    throw DimensionError("relation sets differ in shape: " + a.descriptors.shape_string() +
                         " vs " + b.descriptors.shape_string());
  }
}

}  // namespace

const char* to_string(GeoNorm norm) { return norm == GeoNorm::mse ? "mse" : "l2"; }

GeoNorm parse_geo_norm(const std::string& text) {
  if (text == "mse") return GeoNorm::mse;
  if (text == "l2") return GeoNorm::l2;
  throw ConfigError("unknown geo_norm: " + text);
}

RelationSet relation_descriptors(const PointCloud& cloud, const Matrix& embeddings,
                                 const AnchorSet& anchors) {
  const std::size_t n = cloud.size();
  if (embeddings.rows() != n) {
    throw DimensionError("embeddings have " + std::to_string(embeddings.rows()) +
                         " rows for a cloud of " + std::to_string(n) + " points");
  }
  if (anchors.neighbors.size() != anchors.anchors.size()) {
    throw DimensionError("anchor set has mismatched neighbor lists");
  }
  const std::size_t dim = embeddings.cols();
  RelationSet rel{Matrix(anchors.count(), 3 + dim)};
  for (std::size_t a = 0; a < anchors.count(); ++a) {
    const std::size_t center = anchors.anchors[a];
    const auto& nbrs = anchors.neighbors[a];
    if (nbrs.empty()) throw DimensionError("anchor with an empty neighborhood");
    auto out = rel.descriptors.row(a);
    for (const std::size_t k : nbrs) {
      for (std::size_t c = 0; c < 3; ++c) out[c] += cloud.coords(k, c) - cloud.coords(center, c);
      for (std::size_t c = 0; c < dim; ++c) out[3 + c] += embeddings(k, c) - embeddings(center, c);
    }
    const double inv = 1.0 / static_cast<double>(nbrs.size());
    for (double& x : out) x *= inv;
  }
  return rel;
}

void relation_descriptors_backward(const AnchorSet& anchors, const Matrix& d_descriptors,
                                   Matrix& d_embeddings) {
  const std::size_t dim = d_embeddings.cols();
  if (d_descriptors.rows() != anchors.count() || d_descriptors.cols() != 3 + dim) {
    throw DimensionError("relation gradient shape " + d_descriptors.shape_string() +
                         " does not fit " + std::to_string(anchors.count()) + " anchors and D = " +
                         std::to_string(dim));
  }
  for (std::size_t a = 0; a < anchors.count(); ++a) {
    const auto& nbrs = anchors.neighbors[a];
    const double inv = 1.0 / static_cast<double>(nbrs.size());
    const std::size_t center = anchors.anchors[a];
    for (std::size_t c = 0; c < dim; ++c) {
      const double g = d_descriptors(a, 3 + c) * inv;
      for (const std::size_t k : nbrs) d_embeddings(k, c) += g;
      d_embeddings(center, c) -= g * static_cast<double>(nbrs.size());
    }
  }
}

double geo_transfer_loss(const RelationSet& student, const RelationSet& teacher, GeoNorm norm) {
  require_same(student, teacher);
  const Matrix& s = student.descriptors;
  const Matrix& t = teacher.descriptors;
  if (s.rows() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t a = 0; a < s.rows(); ++a) {
    double sq = 0.0;
    for (std::size_t c = 0; c < s.cols(); ++c) {
      const double d = t(a, c) - s(a, c);
      sq += d * d;
    }
    total += norm == GeoNorm::mse ? sq / static_cast<double>(s.cols()) : std::sqrt(sq);
  }
  return total / static_cast<double>(s.rows());
}

Matrix geo_transfer_loss_grad(const RelationSet& student, const RelationSet& teacher,
                              GeoNorm norm) {
  require_same(student, teacher);
  const Matrix& s = student.descriptors;
  const Matrix& t = teacher.descriptors;
  Matrix grad(s.rows(), s.cols());
  if (s.rows() == 0) return grad;
  const double rows = static_cast<double>(s.rows());
  for (std::size_t a = 0; a < s.rows(); ++a) {
    double scale = 0.0;
    if (norm == GeoNorm::mse) {
      scale = 2.0 / (rows * static_cast<double>(s.cols()));
    } else {
      double sq = 0.0;
      for (std::size_t c = 0; c < s.cols(); ++c) sq += (t(a, c) - s(a, c)) * (t(a, c) - s(a, c));
      const double len = std::sqrt(sq);
      scale = len > 0.0 ? 1.0 / (rows * len) : 0.0;
    }
    for (std::size_t c = 0; c < s.cols(); ++c) grad(a, c) = scale * (s(a, c) - t(a, c));
  }
  return grad;
}

}  // namespace ovad
