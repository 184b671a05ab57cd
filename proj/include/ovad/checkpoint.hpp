// SPDX-License-Identifier: Apache-2.0
#pragma once

// Model checkpoint file:
//
//   bytes 0..7   magic "OVADCKPT"
//   bytes 8..11  header length L (uint32, little-endian)
//   next L bytes JSON header: format version, encoder config, optional
//                attention config, tensor manifest (name, rows, cols, decay),
//                free-form "meta" object
//   remainder    binary32 little-endian tensor payloads in manifest order
//
// Values are truncated to binary32 on save and widened on load.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"
#include "ovad/attndistill.hpp"
#include "ovad/encoder.hpp"

namespace ovad {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  EncoderConfig encoder;
  std::optional<AttentionConfig> attention;
  ParamSet params;
  nlohmann::json meta = nlohmann::json::object();
};

nlohmann::json to_json(const EncoderConfig& config);
EncoderConfig encoder_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AttentionConfig& config);
AttentionConfig attention_config_from_json(const nlohmann::json& j);

std::string serialize_checkpoint(const Checkpoint& checkpoint);
/// `source` names the origin in error messages.
Checkpoint parse_checkpoint(std::string_view bytes, const std::string& source);

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

/// MissingFileError, CorruptFileError (truncated or malformed),
/// VersionMismatchError, or ShapeMismatchError (tensors inconsistent with the
/// stored config, or embed_dim differing from `expected_embed_dim`).
Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::size_t> expected_embed_dim = std::nullopt);

/// Same values after one binary32 round trip, as a load would return them.
ParamSet truncate_to_f32(const ParamSet& params);

}  // namespace ovad
