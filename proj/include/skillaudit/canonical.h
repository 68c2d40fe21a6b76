#pragma once

// Canonical textual encoding shared by every persisted artifact.
//
// The canonical form is a JSON subset: object keys appear in the field order
// declared by each record type (maps use lexicographic key order), integers
// are minimal decimal, strings are UTF-8 with control characters escaped, and
// there is no insignificant whitespace. Reals are finite and rendered in the
// shortest form that round-trips.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "skillaudit/value.h"

namespace skillaudit {

using Json = nlohmann::ordered_json;

class EncodeError : public std::runtime_error {
 public:
  EncodeError(std::string field, const std::string& what)
      : std::runtime_error("cannot encode field '" + field + "': " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class DecodeError : public std::runtime_error {
 public:
  DecodeError(std::string field, const std::string& what)
      : std::runtime_error(field.empty() ? "decode error: " + what
                                         : "decode error at '" + field + "': " + what),
        field_(std::move(field)),
        reason_(what) {}
  const std::string& field() const { return field_; }
  const std::string& reason() const { return reason_; }

 private:
  std::string field_;
  std::string reason_;
};

/// Serializes a tree that was built in canonical field order. Throws
/// EncodeError naming the offending field for invalid UTF-8 or non-finite
/// reals.
std::string canonical_dump(const Json& tree);

/// Parses text and requires it to be byte-identical to its own canonical
/// dump (no whitespace, no escapes beyond the canonical ones).
Json parse_canonical(std::string_view text);

// ---- field helpers used by the per-type codecs ----

const Json& field(const Json& obj, std::string_view name);
std::int64_t decode_int(const Json& j);
std::uint64_t decode_uint(const Json& j);
double decode_real(const Json& j);
bool decode_bool(const Json& j);
std::string decode_string(const Json& j);

inline Json to_canon(std::int64_t v) { return Json(v); }
inline Json to_canon(std::uint64_t v) { return Json(v); }
inline Json to_canon(int v) { return Json(static_cast<std::int64_t>(v)); }
inline Json to_canon(double v) { return Json(v); }
inline Json to_canon(bool v) { return Json(v); }
inline Json to_canon(const std::string& v) { return Json(v); }

inline void from_canon(const Json& j, std::int64_t& out) { out = decode_int(j); }
inline void from_canon(const Json& j, std::uint64_t& out) { out = decode_uint(j); }
inline void from_canon(const Json& j, int& out) { out = static_cast<int>(decode_int(j)); }
inline void from_canon(const Json& j, double& out) { out = decode_real(j); }
inline void from_canon(const Json& j, bool& out) { out = decode_bool(j); }
inline void from_canon(const Json& j, std::string& out) { out = decode_string(j); }

Json to_canon(SemType t);
void from_canon(const Json& j, SemType& out);

// IntVal encodes as {"int":n}, StrVal as {"str":"..."}.
Json to_canon(const Value& v);
void from_canon(const Json& j, Value& out);

template <class T>
Json to_canon(const std::vector<T>& items) {
  Json arr = Json::array();
  for (const auto& item : items) arr.push_back(to_canon(item));
  return arr;
}

template <class T>
Json to_canon(const std::map<std::string, T>& items) {
  Json obj = Json::object();
  for (const auto& [key, item] : items) obj[key] = to_canon(item);
  return obj;
}

template <class T>
Json to_canon(const std::optional<T>& item) {
  return item ? to_canon(*item) : Json(nullptr);
}

template <class T>
void from_canon(const Json& j, std::vector<T>& out);
template <class T>
void from_canon(const Json& j, std::map<std::string, T>& out);
template <class T>
void from_canon(const Json& j, std::optional<T>& out);

/// Reads obj[name] into out, prefixing any nested decode error with name.
template <class T>
void read_field(const Json& obj, std::string_view name, T& out) {
  const Json& j = field(obj, name);
  try {
    from_canon(j, out);
  } catch (const DecodeError& e) {
    std::string path(name);
    if (!e.field().empty()) path += (e.field().front() == '[' ? "" : ".") + e.field();
    throw DecodeError(path, e.reason());
  }
}

template <class T>
T read_field(const Json& obj, std::string_view name) {
  T out{};
  read_field(obj, name, out);
  return out;
}

template <class T>
void from_canon(const Json& j, std::vector<T>& out) {
  if (!j.is_array()) throw DecodeError("", "expected array");
  out.clear();
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    T item{};
    try {
      from_canon(j[i], item);
    } catch (const DecodeError& e) {
      std::string path = "[" + std::to_string(i) + "]";
      if (!e.field().empty()) path += (e.field().front() == '[' ? "" : ".") + e.field();
      throw DecodeError(path, e.reason());
    }
    out.push_back(std::move(item));
  }
}

template <class T>
void from_canon(const Json& j, std::map<std::string, T>& out) {
  if (!j.is_object()) throw DecodeError("", "expected object");
  out.clear();
  for (const auto& [key, item] : j.items()) {
    T value{};
    read_field(j, key, value);
    out.emplace(key, std::move(value));
  }
}

template <class T>
void from_canon(const Json& j, std::optional<T>& out) {
  if (j.is_null()) {
    out.reset();
    return;
  }
  T value{};
  from_canon(j, value);
  out = std::move(value);
}

template <class T>
std::string canonical_encode(const T& record) {
  return canonical_dump(to_canon(record));
}

/// Decodes a record and requires the input to be exactly its canonical
/// encoding, so decode(encode(x)) == x and encode(decode(s)) == s.
template <class T>
T canonical_decode(std::string_view text) {
  const Json tree = parse_canonical(text);
  T out{};
  from_canon(tree, out);
  if (canonical_encode(out) != text) throw DecodeError("", "input is not the canonical encoding");
  return out;
}

}  // namespace skillaudit
