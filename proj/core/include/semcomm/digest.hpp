#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace semcomm {

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex_file(const std::filesystem::path& path);
std::string md5_hex(std::span<const std::uint8_t> bytes);
std::string md5_hex_file(const std::filesystem::path& path);

}  // namespace semcomm
