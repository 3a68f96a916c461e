#pragma once

// Structural JSON Schema checker covering the keywords used by the published report schema:
// type, required, properties, additionalProperties (false), items, minItems, minimum, maximum,
// exclusiveMinimum. Returns a list of violations with JSON pointer paths.

#include <string>
#include <vector>

#include "json.hpp"

namespace schema_check {

using nlohmann::json;

inline bool has_type(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "integer") return v.is_number_integer();
  if (t == "number") return v.is_number();
  if (t == "null") return v.is_null();
  return false;
}

inline void check(const json& schema, const json& v, const std::string& path, std::vector<std::string>& errors) {
  if (schema.contains("type") && !has_type(v, schema["type"].get<std::string>())) {
    errors.push_back(path + ": expected " + schema["type"].get<std::string>());
    return;
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (schema.contains("minimum") && x < schema["minimum"].get<double>()) errors.push_back(path + ": below minimum");
    if (schema.contains("maximum") && x > schema["maximum"].get<double>()) errors.push_back(path + ": above maximum");
    if (schema.contains("exclusiveMinimum") && x <= schema["exclusiveMinimum"].get<double>())
      errors.push_back(path + ": not above exclusiveMinimum");
  }
  if (v.is_object()) {
    for (const auto& key : schema.value("required", json::array()))
      if (!v.contains(key.get<std::string>())) errors.push_back(path + ": missing " + key.get<std::string>());
    const auto props = schema.value("properties", json::object());
    for (const auto& [key, child] : v.items()) {
      if (props.contains(key)) {
        check(props[key], child, path + "/" + key, errors);
      } else if (schema.contains("additionalProperties") && schema["additionalProperties"] == false) {
        errors.push_back(path + ": unexpected property " + key);
      }
    }
  }
  if (v.is_array()) {
    if (schema.contains("minItems") && v.size() < schema["minItems"].get<std::size_t>())
      errors.push_back(path + ": too few items");
    if (schema.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i) check(schema["items"], v[i], path + "/" + std::to_string(i), errors);
  }
}

inline std::vector<std::string> validate(const json& schema, const json& doc) {
  std::vector<std::string> errors;
  check(schema, doc, "", errors);
  return errors;
}

}  // namespace schema_check
