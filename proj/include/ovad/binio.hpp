// SPDX-License-Identifier: Apache-2.0
#pragma once

// Little-endian scalar encoding shared by every binary file the library writes.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace ovad::binio {

void append_f32(std::string& out, double value);
void append_u16(std::string& out, std::uint16_t value);
void append_u32(std::string& out, std::uint32_t value);

float read_f32(const unsigned char* p);
std::uint16_t read_u16(const unsigned char* p);
std::uint32_t read_u32(const unsigned char* p);

/// Whole-file read; MissingFileError when the path does not exist.
std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace ovad::binio
