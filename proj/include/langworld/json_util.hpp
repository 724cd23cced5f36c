#pragma once

#include <string>
#include <string_view>

#include <json.hpp>

#include "langworld/error.hpp"
#include "langworld/geometry.hpp"

namespace langworld {

using Json = nlohmann::json;

namespace json_util {

[[noreturn]] inline void schema_fail(std::string_view where, std::string_view what) {
  throw Error(ErrorCode::SchemaError, std::string(where) + ": " + std::string(what));
}

inline const Json& require(const Json& obj, std::string_view key, std::string_view where) {
  if (!obj.is_object()) schema_fail(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_fail(where, "missing field '" + std::string(key) + "'");
  return *it;
}

inline const Json* optional(const Json& obj, std::string_view key) {
  if (!obj.is_object()) return nullptr;
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return nullptr;
  return &*it;
}

inline std::string as_string(const Json& v, std::string_view where) {
  if (!v.is_string()) schema_fail(where, "expected a string");
  return v.get<std::string>();
}

inline double as_number(const Json& v, std::string_view where) {
  if (!v.is_number()) schema_fail(where, "expected a number");
  return v.get<double>();
}

inline long long as_integer(const Json& v, std::string_view where) {
  if (!v.is_number_integer()) schema_fail(where, "expected an integer");
  return v.get<long long>();
}

inline bool as_bool(const Json& v, std::string_view where) {
  if (!v.is_boolean()) schema_fail(where, "expected a boolean");
  return v.get<bool>();
}

inline const Json& as_array(const Json& v, std::string_view where) {
  if (!v.is_array()) schema_fail(where, "expected an array");
  return v;
}

// [x, y] with real coordinates snapped to the nearest cell.
Cell as_cell(const Json& v, std::string_view where);
Json cell_json(Cell c);

}  // namespace json_util
}  // namespace langworld
