#include "semcomm/digest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace semcomm {
namespace {

using MdCtx = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;

std::string to_hex(const unsigned char* digest, unsigned len) {
  static const char* hex = "0123456789abcdef";
  std::string out(2 * len, '0');
  for (unsigned i = 0; i < len; ++i) {
    out[2 * i] = hex[digest[i] >> 4];
    out[2 * i + 1] = hex[digest[i] & 0xf];
  }
  return out;
}

std::string digest_bytes(const EVP_MD* md, std::span<const std::uint8_t> bytes) {
  MdCtx ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), md, nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw std::runtime_error("digest computation failed");
  return to_hex(digest, len);
}

std::string digest_file(const EVP_MD* md, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path.string());
  MdCtx ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), md, nullptr) != 1)
    throw std::runtime_error("digest init failed");
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0 &&
        EVP_DigestUpdate(ctx.get(), buf.data(),
                         static_cast<std::size_t>(in.gcount())) != 1)
      throw std::runtime_error("digest update failed");
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw std::runtime_error("digest final failed");
  return to_hex(digest, len);
}

}  // namespace

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  return digest_bytes(EVP_sha256(), bytes);
}

std::string sha256_hex_file(const std::filesystem::path& path) {
  return digest_file(EVP_sha256(), path);
}

std::string md5_hex(std::span<const std::uint8_t> bytes) {
  return digest_bytes(EVP_md5(), bytes);
}

std::string md5_hex_file(const std::filesystem::path& path) {
  return digest_file(EVP_md5(), path);
}

}  // namespace semcomm
