#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cryptext {

std::array<uint8_t, 32> sha256(std::span<const uint8_t> data);
std::array<uint8_t, 32> sha256(std::string_view data);

std::string to_hex(std::span<const uint8_t> bytes);
std::vector<uint8_t> from_hex(std::string_view hex);  // throws on bad input

std::string sha256_hex(std::string_view data);
std::string file_sha256_hex(const std::filesystem::path& path);

}  // namespace cryptext
