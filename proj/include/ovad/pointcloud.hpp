// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ovad/ndcore.hpp"

namespace ovad {

using LabelIndex = std::uint16_t;

/// n points (n x 3 coordinates) with optional per-point label indices.
struct PointCloud {
  Matrix coords;
  std::optional<std::vector<LabelIndex>> labels;

  std::size_t size() const { return coords.rows(); }

  /// Throws DimensionError / NumericError / LabelError when the cloud is
  /// empty, not n x 3, non-finite, or carries labels >= label_count.
  void validate(std::optional<std::size_t> label_count = std::nullopt) const;
};

/// FPS anchors and the K nearest neighbors of each anchor (anchor excluded).
struct AnchorSet {
  std::vector<std::size_t> anchors;
  std::vector<std::vector<std::size_t>> neighbors;

  std::size_t count() const { return anchors.size(); }
  std::size_t k() const { return neighbors.empty() ? 0 : neighbors.front().size(); }
};

double squared_distance(const PointCloud& cloud, std::size_t i, std::size_t j);

Matrix pairwise_sq_dist(const PointCloud& cloud);

/// Strict lexicographic (x, y, z) comparison of two points of the cloud,
/// falling back to index order for identical coordinates.
bool lex_less(const PointCloud& cloud, std::size_t i, std::size_t j);

/// Number of anchors floor(r * n); ConfigError when r is outside (0, 1] or
/// the count is zero.
std::size_t anchor_count(std::size_t n, double ratio);

/// Greedy farthest point sampling of `count` points. Starts at the
/// lexicographically smallest point; ties on min-distance go to the
/// lexicographically smaller point, then to the smaller index.
std::vector<std::size_t> fps_count(const PointCloud& cloud, std::size_t count);

/// fps_count with count = floor(ratio * n).
std::vector<std::size_t> fps(const PointCloud& cloud, double ratio);

/// For each anchor, the k closest other points ordered by (squared distance,
/// index). ConfigError when k > n - 1.
AnchorSet knn(const PointCloud& cloud, std::span<const std::size_t> anchors, std::size_t k);

/// knn over every point of the cloud.
AnchorSet knn_all(const PointCloud& cloud, std::size_t k);

}  // namespace ovad
