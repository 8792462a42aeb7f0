#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace pnd {

// Hex digest of a byte string.
std::string sha256_hex(const std::string& data);

// Hex digest of a file's contents.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace pnd
