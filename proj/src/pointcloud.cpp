// SPDX-License-Identifier: Apache-2.0
#include "ovad/pointcloud.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "ovad/error.hpp"

namespace ovad {

void PointCloud::validate(std::optional<std::size_t> label_count) const {
  if (coords.rows() == 0 || coords.cols() != 3) {
    throw DimensionError("point cloud must be n x 3 with n >= 1, got " + coords.shape_string());
  }
  if (!coords.all_finite()) throw NumericError("point cloud has non-finite coordinates");
  if (!labels) return;
  if (labels->size() != coords.rows()) {
    throw DimensionError("label count " + std::to_string(labels->size()) +
                         " does not match point count " + std::to_string(coords.rows()));
  }
  if (label_count) {
    for (const LabelIndex l : *labels) {
      if (l >= *label_count) {
        throw LabelError("label index " + std::to_string(l) + " out of range for " +
                         std::to_string(*label_count) + " labels");
      }
    }
  }
}

double squared_distance(const PointCloud& cloud, std::size_t i, std::size_t j) {
  const auto a = cloud.coords.row(i);
  const auto b = cloud.coords.row(j);
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

Matrix pairwise_sq_dist(const PointCloud& cloud) {
  const std::size_t n = cloud.size();
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = squared_distance(cloud, i, j);
      out(i, j) = d;
      out(j, i) = d;
    }
  }
  return out;
}

bool lex_less(const PointCloud& cloud, std::size_t i, std::size_t j) {
  const auto a = cloud.coords.row(i);
  const auto b = cloud.coords.row(j);
  for (std::size_t c = 0; c < 3; ++c) {
    if (a[c] < b[c]) return true;
    if (b[c] < a[c]) return false;
  }
  return i < j;
}

std::size_t anchor_count(std::size_t n, double ratio) {
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw ConfigError("anchor ratio must lie in (0, 1], got " + std::to_string(ratio));
  }
  const auto count = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
  if (count < 1) {
    throw ConfigError("anchor ratio " + std::to_string(ratio) + " selects no anchors from " +
                      std::to_string(n) + " points");
  }
  return count;
}

std::vector<std::size_t> fps_count(const PointCloud& cloud, std::size_t count) {
  const std::size_t n = cloud.size();
  if (count < 1 || count > n) {
    throw ConfigError("fps needs 1 <= count <= n, got count " + std::to_string(count) +
                      " for n " + std::to_string(n));
  }
  std::size_t start = 0;
  for (std::size_t i = 1; i < n; ++i) {
    if (lex_less(cloud, i, start)) start = i;
  }

  std::vector<std::size_t> selected{start};
  selected.reserve(count);
  std::vector<bool> taken(n, false);
  taken[start] = true;
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::size_t last = start;
  while (selected.size() < count) {
    std::size_t best = n;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      min_dist[i] = std::min(min_dist[i], squared_distance(cloud, i, last));
      if (best == n || min_dist[i] > min_dist[best] ||
          (min_dist[i] == min_dist[best] && lex_less(cloud, i, best))) {
        best = i;
      }
    }
    taken[best] = true;
    selected.push_back(best);
    last = best;
  }
  return selected;
}

std::vector<std::size_t> fps(const PointCloud& cloud, double ratio) {
  return fps_count(cloud, anchor_count(cloud.size(), ratio));
}

AnchorSet knn(const PointCloud& cloud, std::span<const std::size_t> anchors, std::size_t k) {
  const std::size_t n = cloud.size();
  if (n == 0 || k > n - 1) {
    throw ConfigError("knn needs k <= n - 1, got k " + std::to_string(k) + " with n " +
                      std::to_string(n));
  }
  AnchorSet out;
  out.anchors.assign(anchors.begin(), anchors.end());
  out.neighbors.reserve(anchors.size());

  std::vector<std::pair<double, std::size_t>> candidates;
  candidates.reserve(n);
  for (const std::size_t a : anchors) {
    if (a >= n) throw ConfigError("anchor index " + std::to_string(a) + " out of range");
    candidates.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != a) candidates.emplace_back(squared_distance(cloud, a, j), j);
    }
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                      candidates.end());
    std::vector<std::size_t> nbrs(k);
    for (std::size_t i = 0; i < k; ++i) nbrs[i] = candidates[i].second;
    out.neighbors.push_back(std::move(nbrs));
  }
  return out;
}

AnchorSet knn_all(const PointCloud& cloud, std::size_t k) {
  std::vector<std::size_t> all(cloud.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return knn(cloud, all, k);
}

}  // namespace ovad
