#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>

namespace skillaudit {

// Type vocabulary for tool parameters, task inputs and edge contracts.
enum class SemType { kInt, kStr };

std::string_view to_string(SemType type);
SemType sem_type_from_string(std::string_view name);

inline constexpr std::int64_t kMaxIntMagnitude = 1'000'000'000;
inline constexpr std::size_t kMaxStrBytes = 256;

class ValueError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

bool is_valid_utf8(std::string_view text);

/// Tagged scalar carried by tool arguments, tool outputs and task inputs.
///
/// Bounds are enforced at construction (|int| <= 10^9, strings are valid
/// UTF-8 of at most 256 bytes), so every Value is always encodable.
class Value {
 public:
  Value() = default;  // IntVal 0

  static Value integer(std::int64_t v);
  static Value string(std::string s);

  bool is_int() const { return std::holds_alternative<std::int64_t>(data_); }
  bool is_str() const { return std::holds_alternative<std::string>(data_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(data_); }
  const std::string& as_str() const { return std::get<std::string>(data_); }
  SemType type() const { return is_int() ? SemType::kInt : SemType::kStr; }

  bool operator==(const Value&) const = default;

  std::string debug_string() const;

 private:
  explicit Value(std::variant<std::int64_t, std::string> data) : data_(std::move(data)) {}
  std::variant<std::int64_t, std::string> data_{std::int64_t{0}};
};

// Keys are ordered, which is the canonical map order.
using ValueMap = std::map<std::string, Value>;

}  // namespace skillaudit
