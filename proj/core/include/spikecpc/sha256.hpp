#pragma once

#include <cstdint>
#include <span>
#include <string>

namespace spikecpc {

/// SHA-256 digest as a lowercase hex string.
std::string sha256_hex(std::span<const unsigned char> data);
std::string sha256_file_hex(const std::string& path);

}  // namespace spikecpc
