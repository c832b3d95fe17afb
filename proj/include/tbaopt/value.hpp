#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>

#include "json.hpp"
#include "tbaopt/errors.hpp"

namespace tbaopt {

using Json = nlohmann::json;

// One variable assignment. Categorical labels are strings, integer and
// ordinal payloads are int64, continuous values are doubles.
using Value = std::variant<std::int64_t, double, std::string>;

// Assignment of the active variables only, keyed by variable name.
using Configuration = std::map<std::string, Value>;

inline bool is_numeric(const Value& v) {
  return !std::holds_alternative<std::string>(v);
}

inline double as_double(const Value& v) {
  if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
  if (const auto* d = std::get_if<double>(&v)) return *d;
  throw SpecError("value '" + std::get<std::string>(v) + "' is not numeric");
}

inline std::string to_string(const Value& v) {
  if (const auto* s = std::get_if<std::string>(&v)) return *s;
  return Json(std::holds_alternative<double>(v) ? Json(std::get<double>(v))
                                                : Json(std::get<std::int64_t>(v)))
      .dump();
}

inline Json to_json(const Value& v) {
  return std::visit([](const auto& x) { return Json(x); }, v);
}

inline Value value_from_json(const Json& j) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_number_float()) return j.get<double>();
  throw SpecError("unsupported value " + j.dump());
}

inline Json to_json(const Configuration& c) {
  Json j = Json::object();
  for (const auto& [k, v] : c) j[k] = to_json(v);
  return j;
}

inline Configuration configuration_from_json(const Json& j) {
  if (!j.is_object()) throw SpecError("configuration must be an object");
  Configuration c;
  for (const auto& [k, v] : j.items()) c.emplace(k, value_from_json(v));
  return c;
}

}  // namespace tbaopt
