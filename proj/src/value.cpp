#include "skillaudit/value.h"

namespace skillaudit {

std::string_view to_string(SemType type) {
  return type == SemType::kInt ? "INT" : "STR";
}

SemType sem_type_from_string(std::string_view name) {
  if (name == "INT") return SemType::kInt;
  if (name == "STR") return SemType::kStr;
  throw ValueError("unknown semantic type '" + std::string(name) + "'");
}

bool is_valid_utf8(std::string_view text) {
  std::size_t i = 0;
  while (i < text.size()) {
    const auto lead = static_cast<unsigned char>(text[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (lead < 0x80) {
      ++i;
      continue;
    } else if ((lead & 0xE0) == 0xC0) {
      len = 2;
      cp = lead & 0x1F;
    } else if ((lead & 0xF0) == 0xE0) {
      len = 3;
      cp = lead & 0x0F;
    } else if ((lead & 0xF8) == 0xF0) {
      len = 4;
      cp = lead & 0x07;
    } else {
      return false;
    }
    if (i + len > text.size()) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cont = static_cast<unsigned char>(text[i + k]);
      if ((cont & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cont & 0x3F);
    }
    // Overlong forms, surrogates and out-of-range code points.
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        (cp >= 0xD800 && cp <= 0xDFFF) || cp > 0x10FFFF) {
      return false;
    }
    i += len;
  }
  return true;
}

Value Value::integer(std::int64_t v) {
  if (v > kMaxIntMagnitude || v < -kMaxIntMagnitude) {
    throw ValueError("integer " + std::to_string(v) + " exceeds magnitude bound");
  }
  return Value(v);
}

Value Value::string(std::string s) {
  if (s.size() > kMaxStrBytes) {
    throw ValueError("string of " + std::to_string(s.size()) + " bytes exceeds length bound");
  }
  if (!is_valid_utf8(s)) throw ValueError("string is not valid UTF-8");
  return Value(std::move(s));
}

std::string Value::debug_string() const {
  if (is_int()) return std::to_string(as_int());
  return "\"" + as_str() + "\"";
}

}  // namespace skillaudit
