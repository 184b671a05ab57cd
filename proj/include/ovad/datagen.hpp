// SPDX-License-Identifier: Apache-2.0
#pragma once

// Synthetic part-labeled objects, partial-view cropping, resampling, and the
// on-disk dataset layout:
//
//   <dir>/manifest.json     format version, n_points, labels, protocol, seed,
//                           per-cloud file entries
//   <dir>/points_<i>.bin    n x 3 binary32 little-endian, row-major
//   <dir>/labels_<i>.bin    n uint16 little-endian label indices

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ovad/pointcloud.hpp"
#include "ovad/textcorr.hpp"

namespace ovad {

enum class ShapeFamily { mug, table, bottle, knife };

const char* to_string(ShapeFamily family);
ShapeFamily parse_shape_family(const std::string& text);
std::vector<ShapeFamily> all_shape_families();

/// "grasp", "support", "pour", "contain", "cut", "wrap-grasp".
const std::vector<std::string>& default_affordance_labels();

struct ShapeSpec {
  ShapeFamily family = ShapeFamily::mug;
  std::map<std::string, std::string> part_labels;  // part name -> affordance label
  double scale_min = 0.8;
  double scale_max = 1.2;
  double yaw_range = 3.141592653589793;  // yaw uniform in [-yaw_range, yaw_range]
  double tilt_max = 0.15;                // radians about a random horizontal axis

  /// Default geometry and part-to-affordance map for a family.
  static ShapeSpec defaults(ShapeFamily family);

  std::vector<std::string> parts() const;
  std::vector<std::string> used_labels() const;
  /// Upper bound on |p| for any generated point.
  double bounding_radius() const;
};

/// Surface samples of every part of `spec`, labeled by index into
/// `label_set`, then rotated and uniformly scaled. SpecError when a part has
/// no label in `label_set` or would receive no points.
PointCloud gen_shape(const ShapeSpec& spec, std::span<const std::string> label_set,
                     std::size_t n_points, std::uint64_t seed);

/// Points with (p - centroid) . v >= 0.
PointCloud crop_halfspace(const PointCloud& cloud, const std::array<double, 3>& direction);

/// crop_halfspace with seeded random unit directions, retrying (up to 16
/// directions) while fewer than 8 points survive.
PointCloud partial_view_crop(const PointCloud& cloud, std::uint64_t seed);

/// Identity at size n; seeded subsample without replacement (original order
/// kept) above n; originals plus seeded draws with replacement below n.
PointCloud resample_to_n(const PointCloud& cloud, std::size_t n, std::uint64_t seed);

enum class Protocol { full_shape, partial_view };

const char* to_string(Protocol protocol);
Protocol parse_protocol(const std::string& text);

inline constexpr int kDatasetFormatVersion = 1;

struct CloudEntry {
  std::string points_file;
  std::string labels_file;
  std::string family;
};

struct DatasetManifest {
  std::size_t n_points = 0;
  std::vector<std::string> labels;
  Protocol protocol = Protocol::full_shape;
  std::uint64_t seed = 0;
  std::vector<CloudEntry> clouds;
};

struct Dataset {
  DatasetManifest manifest;
  std::vector<PointCloud> clouds;

  std::size_t size() const { return clouds.size(); }
};

struct DatasetOptions {
  std::vector<ShapeFamily> families = all_shape_families();
  std::size_t num_clouds = 16;
  std::size_t n_points = 256;
  bool partial_view = false;
  bool canonical_pose = false;  // no yaw or tilt; scale is still drawn
  std::uint64_t seed = 0;
};

/// Cloud i uses family i mod |families| and seed mix_seed(seed, i).
Dataset generate_dataset(const DatasetOptions& options);

/// Rewrites the file entries to the canonical names before writing.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);
Dataset read_dataset(const std::filesystem::path& dir);

/// Deterministic stand-in text embeddings. Labels in one synonym group share
/// a base unit vector and get normalize(base + 0.1 * noise) with unit noise;
/// other labels get their own base vector. Vectors depend on the label
/// string and seed, not on list position.
TextBank gen_textbank(std::span<const std::string> labels, std::size_t dim, std::uint64_t seed,
                      const std::vector<std::vector<std::string>>& synonym_groups = {});

}  // namespace ovad
