#pragma once

#include <compare>
#include <string>
#include <string_view>

#include "skillaudit/canonical.h"

namespace skillaudit {

/// SHA-256 output as 64 lowercase hex characters.
class Digest {
 public:
  Digest() : hex_(64, '0') {}

  static Digest from_hex(std::string_view hex);
  static bool is_valid_hex(std::string_view hex);

  const std::string& hex() const { return hex_; }
  std::string short_hex() const { return hex_.substr(0, 12); }

  auto operator<=>(const Digest&) const = default;

 private:
  explicit Digest(std::string hex) : hex_(std::move(hex)) {}
  std::string hex_;
};

/// Genesis predecessor of the audit chain: 64 ASCII '0' characters.
inline Digest zero_digest() { return Digest(); }

Digest hash_bytes(std::string_view data);

template <class T>
Digest hash_record(const T& record) {
  return hash_bytes(canonical_encode(record));
}

Json to_canon(const Digest& d);
void from_canon(const Json& j, Digest& out);

}  // namespace skillaudit
