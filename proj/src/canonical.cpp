#include "skillaudit/canonical.h"

#include <cmath>

namespace skillaudit {
namespace {

void validate_tree(const Json& node, const std::string& path) {
  switch (node.type()) {
    case Json::value_t::string:
      if (!is_valid_utf8(node.get_ref<const std::string&>())) {
        throw EncodeError(path.empty() ? "<root>" : path, "string is not valid UTF-8");
      }
      break;
    case Json::value_t::number_float:
      if (!std::isfinite(node.get<double>())) {
        throw EncodeError(path.empty() ? "<root>" : path, "real is not finite");
      }
      break;
    case Json::value_t::array:
      for (std::size_t i = 0; i < node.size(); ++i) {
        validate_tree(node[i], path + "[" + std::to_string(i) + "]");
      }
      break;
    case Json::value_t::object:
      for (const auto& [key, child] : node.items()) {
        if (!is_valid_utf8(key)) throw EncodeError(path, "object key is not valid UTF-8");
        validate_tree(child, path.empty() ? key : path + "." + key);
      }
      break;
    default:
      break;
  }
}

}  // namespace

std::string canonical_dump(const Json& tree) {
  validate_tree(tree, "");
  return tree.dump(-1, ' ', false, Json::error_handler_t::strict);
}

Json parse_canonical(std::string_view text) {
  Json tree;
  try {
    tree = Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    throw DecodeError("", std::string("malformed record: ") + e.what());
  }
  std::string again;
  try {
    again = canonical_dump(tree);
  } catch (const EncodeError& e) {
    throw DecodeError(e.field(), e.what());
  }
  if (again != text) throw DecodeError("", "input is not in canonical form");
  return tree;
}

const Json& field(const Json& obj, std::string_view name) {
  if (!obj.is_object()) throw DecodeError("", "expected object");
  const auto it = obj.find(name);
  if (it == obj.end()) throw DecodeError(std::string(name), "missing field");
  return *it;
}

std::int64_t decode_int(const Json& j) {
  if (j.is_number_integer() && !j.is_number_unsigned()) return j.get<std::int64_t>();
  if (j.is_number_unsigned()) {
    const auto u = j.get<std::uint64_t>();
    if (u > static_cast<std::uint64_t>(INT64_MAX)) throw DecodeError("", "integer out of range");
    return static_cast<std::int64_t>(u);
  }
  throw DecodeError("", "expected integer");
}

std::uint64_t decode_uint(const Json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    const auto v = j.get<std::int64_t>();
    if (v < 0) throw DecodeError("", "expected non-negative integer");
    return static_cast<std::uint64_t>(v);
  }
  throw DecodeError("", "expected non-negative integer");
}

double decode_real(const Json& j) {
  // Integral reals such as 0 may have been written by hand in a config file.
  if (j.is_number()) return j.get<double>();
  throw DecodeError("", "expected real");
}

bool decode_bool(const Json& j) {
  if (!j.is_boolean()) throw DecodeError("", "expected boolean");
  return j.get<bool>();
}

std::string decode_string(const Json& j) {
  if (!j.is_string()) throw DecodeError("", "expected string");
  return j.get<std::string>();
}

Json to_canon(SemType t) { return Json(std::string(to_string(t))); }

void from_canon(const Json& j, SemType& out) {
  try {
    out = sem_type_from_string(decode_string(j));
  } catch (const ValueError& e) {
    throw DecodeError("", e.what());
  }
}

Json to_canon(const Value& v) {
  Json obj = Json::object();
  if (v.is_int()) {
    obj["int"] = v.as_int();
  } else {
    obj["str"] = v.as_str();
  }
  return obj;
}

void from_canon(const Json& j, Value& out) {
  if (!j.is_object() || j.size() != 1) throw DecodeError("", "expected tagged value");
  try {
    if (j.contains("int")) {
      out = Value::integer(read_field<std::int64_t>(j, "int"));
    } else if (j.contains("str")) {
      out = Value::string(read_field<std::string>(j, "str"));
    } else {
      throw DecodeError("", "unknown value tag");
    }
  } catch (const ValueError& e) {
    throw DecodeError(j.contains("int") ? "int" : "str", e.what());
  }
}

}  // namespace skillaudit
