// SPDX-License-Identifier: Apache-2.0
#pragma once

// Brute-force reference implementations used by the unit and acceptance
// suites. Deliberately naive: full recomputation, full sorts, per-point
// recounts.

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "ovad/evalmetrics.hpp"
#include "ovad/pointcloud.hpp"

namespace ovad::oracle {

inline double sq_dist(const PointCloud& c, std::size_t i, std::size_t j) {
  double s = 0.0;
  for (std::size_t d = 0; d < 3; ++d) {
    const double diff = c.coords(i, d) - c.coords(j, d);
    s += diff * diff;
  }
  return s;
}

inline bool lex_before(const PointCloud& c, std::size_t i, std::size_t j) {
  const std::array<double, 3> a{c.coords(i, 0), c.coords(i, 1), c.coords(i, 2)};
  const std::array<double, 3> b{c.coords(j, 0), c.coords(j, 1), c.coords(j, 2)};
  if (a != b) return a < b;
  return i < j;
}

// Exhaustive greedy FPS: every step recomputes each candidate's distance to
// the whole selected set.
inline std::vector<std::size_t> fps(const PointCloud& c, std::size_t count) {
  const std::size_t n = c.size();
  std::size_t start = 0;
  for (std::size_t i = 1; i < n; ++i)
    if (lex_before(c, i, start)) start = i;
  std::vector<std::size_t> sel{start};
  while (sel.size() < count) {
    std::optional<std::size_t> best;
    double best_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (std::find(sel.begin(), sel.end(), i) != sel.end()) continue;
      double d = sq_dist(c, i, sel[0]);
      for (const auto s : sel) d = std::min(d, sq_dist(c, i, s));
      if (!best || d > best_d || (d == best_d && lex_before(c, i, *best))) {
        best = i;
        best_d = d;
      }
    }
    sel.push_back(*best);
  }
  return sel;
}

// Full sort of all other points by (squared distance, index).
inline std::vector<std::size_t> knn(const PointCloud& c, std::size_t anchor, std::size_t k) {
  std::vector<std::pair<double, std::size_t>> all;
  for (std::size_t j = 0; j < c.size(); ++j)
    if (j != anchor) all.emplace_back(sq_dist(c, anchor, j), j);
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(all[i].second);
  return out;
}

// Metrics straight from per-point truth and prediction lists.
inline Metrics metrics(const std::vector<LabelIndex>& truth, const std::vector<LabelIndex>& pred,
                       std::size_t m) {
  Metrics out;
  out.class_iou.resize(m);
  out.class_acc.resize(m);
  std::size_t correct = 0;
  for (std::size_t j = 0; j < truth.size(); ++j) correct += truth[j] == pred[j] ? 1 : 0;
  double iou_sum = 0.0;
  double acc_sum = 0.0;
  std::size_t iou_n = 0;
  std::size_t acc_n = 0;
  for (std::size_t c = 0; c < m; ++c) {
    std::size_t inter = 0;
    std::size_t uni = 0;
    std::size_t in_class = 0;
    for (std::size_t j = 0; j < truth.size(); ++j) {
      const bool t = truth[j] == c;
      const bool p = pred[j] == c;
      inter += (t && p) ? 1 : 0;
      uni += (t || p) ? 1 : 0;
      in_class += t ? 1 : 0;
    }
    if (uni > 0) {
      out.class_iou[c] = static_cast<double>(inter) / static_cast<double>(uni);
      iou_sum += *out.class_iou[c];
      ++iou_n;
    }
    if (in_class > 0) {
      out.class_acc[c] = static_cast<double>(inter) / static_cast<double>(in_class);
      acc_sum += *out.class_acc[c];
      ++acc_n;
    }
  }
  out.acc = static_cast<double>(correct) / static_cast<double>(truth.size());
  out.miou = iou_sum / static_cast<double>(iou_n);
  out.macc = acc_sum / static_cast<double>(acc_n);
  return out;
}

inline bool same_metrics(const Metrics& a, const Metrics& b) {
  return a.miou == b.miou && a.acc == b.acc && a.macc == b.macc && a.class_iou == b.class_iou &&
         a.class_acc == b.class_acc;
}

}  // namespace ovad::oracle
