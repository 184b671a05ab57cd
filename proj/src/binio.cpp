// SPDX-License-Identifier: Apache-2.0
#include "ovad/binio.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "ovad/error.hpp"

namespace ovad::binio {

namespace {

template <typename U>
void append_le(std::string& out, U bits) {
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
  }
}

template <typename U>
U read_le(const unsigned char* p) {
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bits |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  }
  return bits;
}

}  // namespace

void append_f32(std::string& out, double value) {
  append_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(value)));
}

void append_u16(std::string& out, std::uint16_t value) { append_le(out, value); }

void append_u32(std::string& out, std::uint32_t value) { append_le(out, value); }

float read_f32(const unsigned char* p) { return std::bit_cast<float>(read_le<std::uint32_t>(p)); }

std::uint16_t read_u16(const unsigned char* p) { return read_le<std::uint16_t>(p); }

std::uint32_t read_u32(const unsigned char* p) { return read_le<std::uint32_t>(p); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to " + path.string());
}

}  // namespace ovad::binio
