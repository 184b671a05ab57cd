// SPDX-License-Identifier: Apache-2.0
#include "ovad/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "json.hpp"
#include "ovad/binio.hpp"
#include "ovad/error.hpp"
#include "ovad/rng.hpp"

namespace ovad {

namespace fs = std::filesystem;

namespace {

using Vec3 = std::array<double, 3>;
constexpr double kPi = std::numbers::pi;

// One sampled surface; all values in canonical (unposed) object space.
struct Primitive {
  enum class Kind { cylinder, disk, frustum, torus_arc, box, plate } kind;
  // cylinder/disk/frustum: center (x, y), radii r0 -> r1 over z0 -> z1
  // torus_arc: center (x, y, z0), major r0, minor r1, arc [a0, a1] in the xz plane
  // box: [x0, x1] x [y0, y1] x [z0, z1]
  // plate: x in [x0, x1], half-width r0 -> r1, thickness z1 - z0
  double x = 0, y = 0, z0 = 0, z1 = 0, r0 = 0, r1 = 0, a0 = 0, a1 = 0;
  double x0 = 0, x1 = 0, y0 = 0, y1 = 0;

  double area() const {
    switch (kind) {
      case Kind::cylinder: return 2.0 * kPi * r0 * (z1 - z0);
      case Kind::disk: return kPi * r0 * r0;
      case Kind::frustum: return kPi * (r0 + r1) * std::hypot(r1 - r0, z1 - z0);
      case Kind::torus_arc: return (a1 - a0) * 2.0 * kPi * r1 * r0;
      case Kind::box: {
        const double a = x1 - x0, b = y1 - y0, c = z1 - z0;
        return 2.0 * (a * b + b * c + c * a);
      }
      case Kind::plate: return 2.0 * (r0 + r1) * (x1 - x0);  // both faces
    }
    return 0.0;
  }

  double radius_bound() const {
    const double zmax = std::max(std::abs(z0), std::abs(z1));
    switch (kind) {
      case Kind::cylinder:
      case Kind::disk:
      case Kind::frustum:
        return std::hypot(std::hypot(x, y) + std::max(r0, r1), zmax);
      case Kind::torus_arc: return std::sqrt(x * x + y * y + z0 * z0) + r0 + r1;
      case Kind::box:
        return std::sqrt(std::pow(std::max(std::abs(x0), std::abs(x1)), 2) +
                         std::pow(std::max(std::abs(y0), std::abs(y1)), 2) + zmax * zmax);
      case Kind::plate:
        return std::sqrt(std::pow(std::max(std::abs(x0), std::abs(x1)), 2) +
                         std::pow(std::max(r0, r1), 2) + zmax * zmax);
    }
    return 0.0;
  }

  Vec3 sample(Rng& rng) const {
    switch (kind) {
      case Kind::cylinder: {
        const double t = rng.uniform(0.0, 2.0 * kPi);
        return {x + r0 * std::cos(t), y + r0 * std::sin(t), rng.uniform(z0, z1)};
      }
      case Kind::disk: {
        const double r = r0 * std::sqrt(rng.uniform());
        const double t = rng.uniform(0.0, 2.0 * kPi);
        return {x + r * std::cos(t), y + r * std::sin(t), z0};
      }
      case Kind::frustum: {
        const double s = linear_density(rng);
        const double r = r0 + (r1 - r0) * s;
        const double t = rng.uniform(0.0, 2.0 * kPi);
        return {x + r * std::cos(t), y + r * std::sin(t), z0 + (z1 - z0) * s};
      }
      case Kind::torus_arc: {
        // density proportional to (R + rho cos(phi)) over phi
        double phi = 0.0;
        do {
          phi = rng.uniform(0.0, 2.0 * kPi);
        } while (rng.uniform() * (r0 + r1) > r0 + r1 * std::cos(phi));
        const double theta = rng.uniform(a0, a1);
        const double ring = r0 + r1 * std::cos(phi);
        return {x + ring * std::cos(theta), y + r1 * std::sin(phi), z0 + ring * std::sin(theta)};
      }
      case Kind::box: {
        const double a = x1 - x0, b = y1 - y0, c = z1 - z0;
        const double pick = rng.uniform() * (a * b + b * c + c * a);
        const double u = rng.uniform(), v = rng.uniform();
        const double side = rng.uniform() < 0.5 ? 0.0 : 1.0;
        if (pick < a * b) return {x0 + a * u, y0 + b * v, z0 + c * side};
        if (pick < a * b + b * c) return {x0 + a * side, y0 + b * u, z0 + c * v};
        return {x0 + a * u, y0 + b * side, z0 + c * v};
      }
      case Kind::plate: {
        const double s = linear_density(rng);
        const double half = r0 + (r1 - r0) * s;
        const double face = rng.uniform() < 0.5 ? z0 : z1;
        return {x0 + (x1 - x0) * s, rng.uniform(-half, half), face};
      }
    }
    return {0, 0, 0};
  }

 private:
  // s in [0, 1] with density proportional to r0 + (r1 - r0) s
  double linear_density(Rng& rng) const {
    const double u = rng.uniform();
    if (std::abs(r1 - r0) < 1e-12) return u;
    return (std::sqrt(r0 * r0 + u * (r1 * r1 - r0 * r0)) - r0) / (r1 - r0);
  }
};

Primitive cylinder(double x, double y, double r, double z0, double z1) {
  Primitive p{Primitive::Kind::cylinder};
  p.x = x, p.y = y, p.r0 = r, p.r1 = r, p.z0 = z0, p.z1 = z1;
  return p;
}

Primitive disk(double x, double y, double r, double z) {
  Primitive p{Primitive::Kind::disk};
  p.x = x, p.y = y, p.r0 = r, p.r1 = r, p.z0 = z, p.z1 = z;
  return p;
}

Primitive frustum(double r0, double r1, double z0, double z1) {
  Primitive p{Primitive::Kind::frustum};
  p.r0 = r0, p.r1 = r1, p.z0 = z0, p.z1 = z1;
  return p;
}

Primitive torus_arc(double cx, double cz, double major, double minor, double a0, double a1) {
  Primitive p{Primitive::Kind::torus_arc};
  p.x = cx, p.z0 = cz, p.z1 = cz, p.r0 = major, p.r1 = minor, p.a0 = a0, p.a1 = a1;
  return p;
}

Primitive box(double x0, double x1, double y0, double y1, double z0, double z1) {
  Primitive p{Primitive::Kind::box};
  p.x0 = x0, p.x1 = x1, p.y0 = y0, p.y1 = y1, p.z0 = z0, p.z1 = z1;
  return p;
}

Primitive plate(double x0, double x1, double half0, double half1, double thickness) {
  Primitive p{Primitive::Kind::plate};
  p.x0 = x0, p.x1 = x1, p.r0 = half0, p.r1 = half1, p.z0 = -thickness / 2, p.z1 = thickness / 2;
  return p;
}

struct Part {
  std::string name;
  std::vector<Primitive> surfaces;
};

std::vector<Part> family_parts(ShapeFamily family) {
  switch (family) {
    case ShapeFamily::mug:
      return {{"body", {cylinder(0, 0, 0.45, -0.4, 0.4), disk(0, 0, 0.45, -0.4)}},
              {"handle", {torus_arc(0.45, 0.0, 0.22, 0.045, -kPi / 2, kPi / 2)}}};
    case ShapeFamily::bottle:
      return {{"body", {cylinder(0, 0, 0.3, -0.7, 0.2), disk(0, 0, 0.3, -0.7)}},
              {"neck", {frustum(0.3, 0.1, 0.2, 0.5), cylinder(0, 0, 0.1, 0.5, 0.75)}}};
    case ShapeFamily::table: {
      Part legs{"legs", {}};
      for (const double sx : {-0.5, 0.5}) {
        for (const double sy : {-0.3, 0.3}) legs.surfaces.push_back(cylinder(sx, sy, 0.04, -0.4, 0.32));
      }
      return {{"top", {box(-0.6, 0.6, -0.4, 0.4, 0.32, 0.4)}}, legs};
    }
    case ShapeFamily::knife:
      return {{"handle", {box(-0.5, -0.15, -0.03, 0.03, -0.02, 0.02)}},
              {"blade", {plate(-0.15, 0.55, 0.06, 0.005, 0.01)}}};
  }
  return {};
}

Vec3 unit_direction(Rng& rng) {
  for (;;) {
    Vec3 v{rng.normal(), rng.normal(), rng.normal()};
    const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (len > 1e-12) return {v[0] / len, v[1] / len, v[2] / len};
  }
}

// Rodrigues rotation of v about unit axis k by angle a.
Vec3 rotate(const Vec3& v, const Vec3& k, double a) {
  const double c = std::cos(a), s = std::sin(a);
  const double kv = k[0] * v[0] + k[1] * v[1] + k[2] * v[2];
  const Vec3 cross{k[1] * v[2] - k[2] * v[1], k[2] * v[0] - k[0] * v[2], k[0] * v[1] - k[1] * v[0]};
  Vec3 out;
  for (int i = 0; i < 3; ++i) out[i] = v[i] * c + cross[i] * s + k[i] * kv * (1 - c);
  return out;
}

PointCloud subset(const PointCloud& cloud, const std::vector<std::size_t>& keep) {
  PointCloud out;
  out.coords = Matrix(keep.size(), 3);
  for (std::size_t r = 0; r < keep.size(); ++r) {
    for (std::size_t c = 0; c < 3; ++c) out.coords(r, c) = cloud.coords(keep[r], c);
  }
  if (cloud.labels) {
    std::vector<LabelIndex> labels(keep.size());
    for (std::size_t r = 0; r < keep.size(); ++r) labels[r] = (*cloud.labels)[keep[r]];
    out.labels = std::move(labels);
  }
  return out;
}

std::string points_name(std::size_t i) { return "points_" + std::to_string(i) + ".bin"; }
std::string labels_name(std::size_t i) { return "labels_" + std::to_string(i) + ".bin"; }

}  // namespace

const char* to_string(ShapeFamily family) {
  switch (family) {
    case ShapeFamily::mug: return "mug";
    case ShapeFamily::table: return "table";
    case ShapeFamily::bottle: return "bottle";
    case ShapeFamily::knife: return "knife";
  }
  return "?";
}

ShapeFamily parse_shape_family(const std::string& text) {
  for (const auto f : all_shape_families()) {
    if (text == to_string(f)) return f;
  }
  throw ConfigError("unknown shape family: " + text);
}

std::vector<ShapeFamily> all_shape_families() {
  return {ShapeFamily::mug, ShapeFamily::table, ShapeFamily::bottle, ShapeFamily::knife};
}

const std::vector<std::string>& default_affordance_labels() {
  static const std::vector<std::string> labels{"grasp", "support", "pour",
                                               "contain", "cut", "wrap-grasp"};
  return labels;
}

ShapeSpec ShapeSpec::defaults(ShapeFamily family) {
  ShapeSpec spec;
  spec.family = family;
  switch (family) {
    case ShapeFamily::mug: spec.part_labels = {{"body", "contain"}, {"handle", "grasp"}}; break;
    case ShapeFamily::bottle: spec.part_labels = {{"body", "wrap-grasp"}, {"neck", "pour"}}; break;
    case ShapeFamily::table: spec.part_labels = {{"top", "support"}, {"legs", "support"}}; break;
    case ShapeFamily::knife: spec.part_labels = {{"handle", "grasp"}, {"blade", "cut"}}; break;
  }
  return spec;
}

std::vector<std::string> ShapeSpec::parts() const {
  std::vector<std::string> out;
  for (const auto& p : family_parts(family)) out.push_back(p.name);
  return out;
}

std::vector<std::string> ShapeSpec::used_labels() const {
  std::set<std::string> used;
  for (const auto& [part, label] : part_labels) used.insert(label);
  std::vector<std::string> out;
  for (const auto& l : default_affordance_labels()) {
    if (used.erase(l) != 0) out.push_back(l);
  }
  out.insert(out.end(), used.begin(), used.end());
  return out;
}

double ShapeSpec::bounding_radius() const {
  double r = 0.0;
  for (const auto& part : family_parts(family)) {
    for (const auto& s : part.surfaces) r = std::max(r, s.radius_bound());
  }
  return r * std::max(std::abs(scale_min), std::abs(scale_max));
}

PointCloud gen_shape(const ShapeSpec& spec, std::span<const std::string> label_set,
                     std::size_t n_points, std::uint64_t seed) {
  if (!(spec.scale_min > 0.0) || spec.scale_max < spec.scale_min) {
    throw SpecError("invalid scale range for " + std::string(to_string(spec.family)));
  }
  const auto parts = family_parts(spec.family);

  struct Slot {
    const Primitive* surface;
    LabelIndex label;
    double area;
    std::size_t part;
  };
  std::vector<Slot> slots;
  double total_area = 0.0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const auto it = spec.part_labels.find(parts[p].name);
    if (it == spec.part_labels.end()) {
      throw SpecError("part '" + parts[p].name + "' of " + to_string(spec.family) +
                      " has no affordance label");
    }
    const auto pos = std::find(label_set.begin(), label_set.end(), it->second);
    if (pos == label_set.end()) {
      throw SpecError("label '" + it->second + "' is not in the dataset label set");
    }
    for (const auto& s : parts[p].surfaces) {
      slots.push_back({&s, static_cast<LabelIndex>(pos - label_set.begin()), s.area(), p});
      total_area += s.area();
    }
  }

  // largest-remainder allocation of points proportional to area
  std::vector<std::size_t> counts(slots.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const double exact = static_cast<double>(n_points) * slots[i].area / total_area;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    assigned += counts[i];
    remainders.emplace_back(-(exact - std::floor(exact)), i);
  }
  std::sort(remainders.begin(), remainders.end());
  for (std::size_t r = 0; assigned < n_points; ++r, ++assigned) ++counts[remainders[r].second];

  std::vector<std::size_t> per_part(parts.size(), 0);
  for (std::size_t i = 0; i < slots.size(); ++i) per_part[slots[i].part] += counts[i];
  for (std::size_t p = 0; p < parts.size(); ++p) {
    if (per_part[p] == 0) {
      throw SpecError("part '" + parts[p].name + "' of " + to_string(spec.family) +
                      " is empty at " + std::to_string(n_points) + " points");
    }
  }

  Rng rng(seed);
  const double scale = rng.uniform(spec.scale_min, spec.scale_max);
  const double yaw = rng.uniform(-spec.yaw_range, spec.yaw_range);
  const double tilt_axis = rng.uniform(0.0, 2.0 * kPi);
  const double tilt = rng.uniform(0.0, spec.tilt_max);
  const Vec3 up{0, 0, 1};
  const Vec3 horizontal{std::cos(tilt_axis), std::sin(tilt_axis), 0};

  PointCloud cloud;
  cloud.coords = Matrix(n_points, 3);
  std::vector<LabelIndex> labels;
  labels.reserve(n_points);
  std::size_t row = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    for (std::size_t c = 0; c < counts[i]; ++c, ++row) {
      const Vec3 p = rotate(rotate(slots[i].surface->sample(rng), up, yaw), horizontal, tilt);
      for (std::size_t k = 0; k < 3; ++k) cloud.coords(row, k) = scale * p[k];
      labels.push_back(slots[i].label);
    }
  }

  // shuffle so point order carries no part information
  std::vector<std::size_t> order(n_points);
  for (std::size_t i = 0; i < n_points; ++i) order[i] = i;
  for (std::size_t i = n_points; i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  cloud.labels = std::move(labels);
  return subset(cloud, order);
}

PointCloud crop_halfspace(const PointCloud& cloud, const std::array<double, 3>& direction) {
  Vec3 centroid{0, 0, 0};
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (std::size_t c = 0; c < 3; ++c) centroid[c] += cloud.coords(i, c);
  }
  for (double& c : centroid) c /= static_cast<double>(cloud.size());
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    double side = 0.0;
    for (std::size_t c = 0; c < 3; ++c) side += (cloud.coords(i, c) - centroid[c]) * direction[c];
    if (side >= 0.0) keep.push_back(i);
  }
  return subset(cloud, keep);
}

PointCloud partial_view_crop(const PointCloud& cloud, std::uint64_t seed) {
  if (cloud.size() < 2) throw ConfigError("partial_view_crop needs at least 2 points");
  Rng rng(seed);
  for (int attempt = 0; attempt < 16; ++attempt) {
    PointCloud out = crop_halfspace(cloud, unit_direction(rng));
    if (out.size() >= 8) return out;
  }
  throw SpecError("partial_view_crop: fewer than 8 points survive after 16 directions");
}

PointCloud resample_to_n(const PointCloud& cloud, std::size_t n, std::uint64_t seed) {
  const std::size_t size = cloud.size();
  if (size == 0) throw ConfigError("cannot resample an empty cloud");
  if (size == n) return cloud;
  Rng rng(seed);
  std::vector<std::size_t> keep;
  if (size > n) {
    std::vector<std::size_t> order(size);
    for (std::size_t i = 0; i < size; ++i) order[i] = i;
    for (std::size_t i = 0; i < n; ++i) std::swap(order[i], order[i + rng.index(size - i)]);
    keep.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n));
    std::sort(keep.begin(), keep.end());
  } else {
    keep.resize(size);
    for (std::size_t i = 0; i < size; ++i) keep[i] = i;
    while (keep.size() < n) keep.push_back(rng.index(size));
  }
  return subset(cloud, keep);
}

const char* to_string(Protocol protocol) {
  return protocol == Protocol::full_shape ? "full-shape" : "partial-view";
}

Protocol parse_protocol(const std::string& text) {
  if (text == "full-shape") return Protocol::full_shape;
  if (text == "partial-view") return Protocol::partial_view;
  throw ConfigError("unknown protocol: " + text);
}

Dataset generate_dataset(const DatasetOptions& options) {
  if (options.families.empty()) throw ConfigError("dataset needs at least one shape family");
  if (options.num_clouds == 0) throw ConfigError("dataset needs at least one cloud");

  std::set<std::string> used;
  for (const auto f : options.families) {
    for (const auto& l : ShapeSpec::defaults(f).used_labels()) used.insert(l);
  }
  Dataset ds;
  for (const auto& l : default_affordance_labels()) {
    if (used.count(l) != 0) ds.manifest.labels.push_back(l);
  }
  ds.manifest.n_points = options.n_points;
  ds.manifest.protocol = options.partial_view ? Protocol::partial_view : Protocol::full_shape;
  ds.manifest.seed = options.seed;

  for (std::size_t i = 0; i < options.num_clouds; ++i) {
    const ShapeFamily family = options.families[i % options.families.size()];
    ShapeSpec spec = ShapeSpec::defaults(family);
    if (options.canonical_pose) {
      spec.yaw_range = 0.0;
      spec.tilt_max = 0.0;
    }
    const std::uint64_t cloud_seed = mix_seed(options.seed, i);
    PointCloud cloud;
    if (options.partial_view) {
      const PointCloud full = gen_shape(spec, ds.manifest.labels, 2 * options.n_points, cloud_seed);
      cloud = resample_to_n(partial_view_crop(full, mix_seed(cloud_seed, 1)), options.n_points,
                            mix_seed(cloud_seed, 2));
    } else {
      cloud = gen_shape(spec, ds.manifest.labels, options.n_points, cloud_seed);
    }
    ds.clouds.push_back(std::move(cloud));
    ds.manifest.clouds.push_back({points_name(i), labels_name(i), to_string(family)});
  }
  return ds;
}

void write_dataset(const Dataset& dataset, const fs::path& dir) {
  if (dataset.clouds.empty()) throw ConfigError("refusing to write an empty dataset");
  const std::size_t n = dataset.manifest.n_points;
  const std::size_t m = dataset.manifest.labels.size();
  for (const auto& cloud : dataset.clouds) {
    if (cloud.size() != n) {
      throw DimensionError("cloud with " + std::to_string(cloud.size()) +
                           " points in a dataset of n_points " + std::to_string(n));
    }
    if (!cloud.labels) throw ConfigError("dataset clouds must be labeled");
    cloud.validate(m);
  }
  fs::create_directories(dir);

  nlohmann::json entries = nlohmann::json::array();
  for (std::size_t i = 0; i < dataset.clouds.size(); ++i) {
    const auto& cloud = dataset.clouds[i];
    std::string points;
    points.reserve(n * 12);
    for (const double x : cloud.coords.values()) binio::append_f32(points, x);
    std::string labels;
    labels.reserve(n * 2);
    for (const LabelIndex l : *cloud.labels) binio::append_u16(labels, l);
    binio::write_file(dir / points_name(i), points);
    binio::write_file(dir / labels_name(i), labels);
    const std::string family =
        i < dataset.manifest.clouds.size() ? dataset.manifest.clouds[i].family : "";
    entries.push_back(
        {{"points", points_name(i)}, {"labels", labels_name(i)}, {"family", family}});
  }
  const nlohmann::json manifest = {{"format_version", kDatasetFormatVersion},
                                   {"n_points", n},
                                   {"labels", dataset.manifest.labels},
                                   {"protocol", to_string(dataset.manifest.protocol)},
                                   {"seed", dataset.manifest.seed},
                                   {"clouds", entries}};
  binio::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Dataset read_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(binio::read_file(manifest_path));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFileError("malformed dataset manifest " + manifest_path.string() + ": " +
                           e.what());
  }

  Dataset ds;
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != kDatasetFormatVersion) {
      throw VersionMismatchError("dataset " + manifest_path.string() + " has format version " +
                                 std::to_string(version));
    }
    ds.manifest.n_points = manifest.at("n_points").get<std::size_t>();
    ds.manifest.labels = manifest.at("labels").get<std::vector<std::string>>();
    ds.manifest.protocol = parse_protocol(manifest.at("protocol").get<std::string>());
    ds.manifest.seed = manifest.at("seed").get<std::uint64_t>();
    for (const auto& e : manifest.at("clouds")) {
      ds.manifest.clouds.push_back({e.at("points").get<std::string>(),
                                    e.at("labels").get<std::string>(),
                                    e.value("family", std::string())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFileError("malformed dataset manifest " + manifest_path.string() + ": " +
                           e.what());
  }
  if (ds.manifest.clouds.empty()) throw CorruptFileError("dataset manifest lists no clouds");

  const std::size_t n = ds.manifest.n_points;
  const std::size_t m = ds.manifest.labels.size();
  for (const auto& entry : ds.manifest.clouds) {
    const std::string points = binio::read_file(dir / entry.points_file);
    const std::string labels = binio::read_file(dir / entry.labels_file);
    if (points.size() != n * 12 || labels.size() != n * 2) {
      throw ShapeMismatchError("cloud files " + entry.points_file + " / " + entry.labels_file +
                               " do not hold " + std::to_string(n) + " points");
    }
    const auto* pb = reinterpret_cast<const unsigned char*>(points.data());
    const auto* lb = reinterpret_cast<const unsigned char*>(labels.data());
    PointCloud cloud;
    std::vector<double> coords(n * 3);
    for (std::size_t i = 0; i < coords.size(); ++i) coords[i] = binio::read_f32(pb + 4 * i);
    cloud.coords = Matrix(n, 3, std::move(coords));
    std::vector<LabelIndex> idx(n);
    for (std::size_t i = 0; i < n; ++i) {
      idx[i] = binio::read_u16(lb + 2 * i);
      if (idx[i] >= m) {
        throw LabelError("label value " + std::to_string(idx[i]) + " in " + entry.labels_file +
                         " is outside the manifest's " + std::to_string(m) + " labels");
      }
    }
    cloud.labels = std::move(idx);
    cloud.validate(m);
    ds.clouds.push_back(std::move(cloud));
  }
  return ds;
}

TextBank gen_textbank(std::span<const std::string> labels, std::size_t dim, std::uint64_t seed,
                      const std::vector<std::vector<std::string>>& synonym_groups) {
  if (dim < 2) throw ConfigError("text embedding dim must be >= 2");
  std::map<std::string, std::string> group_key;
  for (const auto& group : synonym_groups) {
    if (group.empty()) continue;
    for (const auto& member : group) {
      if (!group_key.emplace(member, group.front()).second) {
        throw ConfigError("label '" + member + "' appears in more than one synonym group");
      }
    }
  }

  auto unit_vector = [dim](std::uint64_t s) {
    Rng rng(s);
    std::vector<double> v(dim);
    double len = 0.0;
    while (len < 1e-12) {
      for (double& x : v) x = rng.normal();
      len = norm(v);
    }
    for (double& x : v) x /= len;
    return v;
  };

  TextBank bank;
  bank.normalized = true;
  bank.embeddings = Matrix(labels.size(), dim);
  std::set<std::string> seen;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const std::string& label = labels[r];
    if (!seen.insert(label).second) throw ConfigError("duplicate label: " + label);
    bank.labels.push_back(label);
    const auto it = group_key.find(label);
    std::vector<double> v;
    if (it == group_key.end()) {
      v = unit_vector(mix_seed(seed, hash_string("base:" + label)));
    } else {
      v = unit_vector(mix_seed(seed, hash_string("base:" + it->second)));
      const auto noise = unit_vector(mix_seed(seed, hash_string("noise:" + label)));
      for (std::size_t d = 0; d < dim; ++d) v[d] += 0.1 * noise[d];
      const double len = norm(v);
      for (double& x : v) x /= len;
    }
    std::copy(v.begin(), v.end(), bank.embeddings.row(r).begin());
  }
  bank.validate();
  return bank;
}

}  // namespace ovad
