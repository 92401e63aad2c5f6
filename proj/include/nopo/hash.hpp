// SHA-256 helpers (OpenSSL EVP) for artifact manifests and binary
// container integrity.
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace nopo {

std::vector<std::uint8_t> sha256_bytes(const void* data, std::size_t len);
std::string sha256_hex(const void* data, std::size_t len);
std::string sha256_hex(const std::string& s);
std::string sha256_file_hex(const std::filesystem::path& path);

}  // namespace nopo
