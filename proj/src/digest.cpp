#include "skillaudit/digest.h"

#include <openssl/evp.h>

#include <array>
#include <memory>

namespace skillaudit {

bool Digest::is_valid_hex(std::string_view hex) {
  if (hex.size() != 64) return false;
  for (const char c : hex) {
    if (!((c >= '0' && c <= '9') || (c >= 'a' && c <= 'f'))) return false;
  }
  return true;
}

Digest Digest::from_hex(std::string_view hex) {
  if (!is_valid_hex(hex)) {
    throw std::invalid_argument("not a 64-character lowercase hex digest: '" + std::string(hex) + "'");
  }
  return Digest(std::string(hex));
}

Digest hash_bytes(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), data.data(), data.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1 || len != 32) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex(64, '0');
  for (unsigned int i = 0; i < len; ++i) {
    hex[2 * i] = kHex[md[i] >> 4];
    hex[2 * i + 1] = kHex[md[i] & 0x0F];
  }
  return Digest::from_hex(hex);
}

Json to_canon(const Digest& d) { return Json(d.hex()); }

void from_canon(const Json& j, Digest& out) {
  const std::string hex = decode_string(j);
  if (!Digest::is_valid_hex(hex)) throw DecodeError("", "malformed digest");
  out = Digest::from_hex(hex);
}

}  // namespace skillaudit
