#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <json.hpp>

#include "kcs/estimators.hpp"
#include "kcs/types.hpp"

namespace kcs::detail {

using json = nlohmann::ordered_json;

inline json number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline double get_number(const json& j, const char* what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  }
  throw Error(std::string("json: field '") + what + "' must be a number");
}

inline const json& field(const json& j, const char* key) {
  if (!j.is_object()) throw Error(std::string("json: expected an object holding '") + key + "'");
  const auto it = j.find(key);
  if (it == j.end()) throw Error(std::string("json: missing field '") + key + "'");
  return *it;
}

inline double number_field(const json& j, const char* key) { return get_number(field(j, key), key); }

inline std::string string_field(const json& j, const char* key) {
  const json& v = field(j, key);
  if (!v.is_string()) throw Error(std::string("json: field '") + key + "' must be a string");
  return v.get<std::string>();
}

json vector_json(const Vector& v);
Vector vector_from(const json& j, const char* what);
json points_json(const Points& x);
Points points_from(const json& j, const char* what);

json kernel_json(const KernelSpec& k);
KernelSpec kernel_from(const json& j);
json loss_json(const LossSpec& l);
LossSpec loss_from(const json& j);
json solver_json(const SolverOptions& s);
SolverOptions solver_from(const json& j);
json fit_config_json(const FitConfig& cfg);
FitConfig fit_config_from(const json& j);

json parse(std::string_view text);

}  // namespace kcs::detail
