// SPDX-License-Identifier: Apache-2.0
#include "ovad/checkpoint.hpp"

#include <cstring>

#include "ovad/binio.hpp"
#include "ovad/error.hpp"

namespace ovad {

namespace {

constexpr std::string_view kMagic = "OVADCKPT";

}  // namespace

nlohmann::json to_json(const EncoderConfig& config) {
  return {{"embed_dim", config.embed_dim},
          {"hidden_widths", config.hidden_widths},
          {"neighborhood_k", config.neighborhood_k},
          {"role", to_string(config.role)}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.embed_dim = j.at("embed_dim").get<std::size_t>();
  c.hidden_widths = j.at("hidden_widths").get<std::vector<std::size_t>>();
  c.neighborhood_k = j.at("neighborhood_k").get<std::size_t>();
  c.role = parse_model_role(j.at("role").get<std::string>());
  return c;
}

nlohmann::json to_json(const AttentionConfig& config) {
  return {{"query_size", config.query_size}, {"head_dim", config.head_dim}};
}

AttentionConfig attention_config_from_json(const nlohmann::json& j) {
  return {j.at("query_size").get<std::size_t>(), j.at("head_dim").get<std::size_t>()};
}

std::string serialize_checkpoint(const Checkpoint& checkpoint) {
  nlohmann::json manifest = nlohmann::json::array();
  std::string payload;
  for (const auto& [name, e] : checkpoint.params) {
    manifest.push_back(
        {{"name", name}, {"rows", e.value.rows()}, {"cols", e.value.cols()}, {"decay", e.decay}});
    for (const double x : e.value.values()) binio::append_f32(payload, x);
  }
  nlohmann::json header = {{"format_version", kCheckpointFormatVersion},
                           {"encoder", to_json(checkpoint.encoder)},
                           {"tensors", manifest},
                           {"meta", checkpoint.meta}};
  header["attention"] =
      checkpoint.attention ? to_json(*checkpoint.attention) : nlohmann::json(nullptr);
  const std::string text = header.dump();

  std::string out(kMagic);
  binio::append_u32(out, static_cast<std::uint32_t>(text.size()));
  out += text;
  out += payload;
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes, const std::string& source) {
  if (bytes.size() < kMagic.size() + 4 || bytes.substr(0, kMagic.size()) != kMagic) {
    throw CorruptFileError("not a checkpoint (bad magic): " + source);
  }
  const auto* raw = reinterpret_cast<const unsigned char*>(bytes.data());
  const std::size_t header_len = binio::read_u32(raw + kMagic.size());
  const std::size_t payload_start = kMagic.size() + 4 + header_len;
  if (payload_start > bytes.size()) throw CorruptFileError("truncated checkpoint header: " + source);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.substr(kMagic.size() + 4, header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFileError("malformed checkpoint header in " + source + ": " + e.what());
  }

  Checkpoint ckpt;
  try {
    const int version = header.at("format_version").get<int>();
    if (version != kCheckpointFormatVersion) {
      throw VersionMismatchError("checkpoint " + source + " has format version " +
                                 std::to_string(version) + ", expected " +
                                 std::to_string(kCheckpointFormatVersion));
    }
    ckpt.encoder = encoder_config_from_json(header.at("encoder"));
    if (!header.at("attention").is_null()) {
      ckpt.attention = attention_config_from_json(header.at("attention"));
    }
    ckpt.meta = header.value("meta", nlohmann::json::object());

    std::size_t offset = payload_start;
    for (const auto& t : header.at("tensors")) {
      const auto rows = t.at("rows").get<std::size_t>();
      const auto cols = t.at("cols").get<std::size_t>();
      const std::size_t count = rows * cols;
      if (offset + 4 * count > bytes.size()) {
        throw CorruptFileError("truncated checkpoint payload: " + source);
      }
      std::vector<double> values(count);
      for (std::size_t i = 0; i < count; ++i) values[i] = binio::read_f32(raw + offset + 4 * i);
      offset += 4 * count;
      ckpt.params.add(t.at("name").get<std::string>(), Matrix(rows, cols, std::move(values)),
                      t.at("decay").get<bool>());
    }
    if (offset != bytes.size()) throw CorruptFileError("trailing bytes in checkpoint: " + source);
  } catch (const nlohmann::json::exception& e) {
    throw CorruptFileError("malformed checkpoint header in " + source + ": " + e.what());
  } catch (const ConfigError& e) {
    throw CorruptFileError("invalid checkpoint " + source + ": " + e.what());
  }

  try {
    ckpt.encoder.validate();
    if (ckpt.attention) ckpt.attention->validate();
  } catch (const ConfigError& e) {
    throw CorruptFileError("invalid configuration in checkpoint " + source + ": " + e.what());
  }
  check_encoder_weights(ckpt.params, ckpt.encoder);
  if (ckpt.attention) check_projector_weights(ckpt.params, ckpt.encoder.embed_dim, *ckpt.attention);
  for (const auto& [name, e] : ckpt.params) {
    if (!e.value.all_finite()) throw CorruptFileError("non-finite tensor " + name + " in " + source);
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  binio::write_file(path, serialize_checkpoint(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::size_t> expected_embed_dim) {
  const std::string bytes = binio::read_file(path);
  Checkpoint ckpt = parse_checkpoint(bytes, path.string());
  if (expected_embed_dim && ckpt.encoder.embed_dim != *expected_embed_dim) {
    throw ShapeMismatchError("checkpoint " + path.string() + " has embed_dim " +
                             std::to_string(ckpt.encoder.embed_dim) + ", expected " +
                             std::to_string(*expected_embed_dim));
  }
  return ckpt;
}

ParamSet truncate_to_f32(const ParamSet& params) {
  ParamSet out;
  for (const auto& [name, e] : params) {
    Matrix v = e.value;
    for (double& x : v.values()) x = static_cast<double>(static_cast<float>(x));
    out.add(name, std::move(v), e.decay);
  }
  return out;
}

}  // namespace ovad
