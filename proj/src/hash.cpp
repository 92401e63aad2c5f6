#include "nopo/hash.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <stdexcept>

namespace nopo {

std::vector<std::uint8_t> sha256_bytes(const void* data, std::size_t len) {
  std::vector<std::uint8_t> out(32);
  unsigned int n = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data, len) != 1 ||
      EVP_DigestFinal_ex(ctx, out.data(), &n) != 1 || n != 32) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256: digest failure");
  }
  EVP_MD_CTX_free(ctx);
  return out;
}

namespace {
std::string to_hex(const std::vector<std::uint8_t>& v) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(2 * v.size());
  for (std::uint8_t b : v) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xF]);
  }
  return s;
}
}  // namespace

std::string sha256_hex(const void* data, std::size_t len) {
  return to_hex(sha256_bytes(data, len));
}

std::string sha256_hex(const std::string& s) {
  return sha256_hex(s.data(), s.size());
}

std::string sha256_file_hex(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("sha256: cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return sha256_hex(data);
}

}  // namespace nopo
