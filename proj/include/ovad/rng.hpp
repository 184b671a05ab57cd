// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>

namespace ovad {

/// Seeded generator with distributions defined here rather than by the
/// standard library, so sequences are identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
  std::size_t index(std::size_t n);

  /// Standard normal via Box-Muller (one value per call).
  double normal();

 private:
  std::mt19937_64 engine_;
};

/// splitmix64 finalizer of (base, stream); used to derive per-item seeds.
std::uint64_t mix_seed(std::uint64_t base, std::uint64_t stream);

/// FNV-1a 64-bit hash of a string.
std::uint64_t hash_string(std::string_view text);

}  // namespace ovad
