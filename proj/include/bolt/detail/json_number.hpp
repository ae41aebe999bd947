#pragma once

#include <cmath>
#include <limits>
#include <string>

#include <json.hpp>

#include "bolt/errors.hpp"

namespace bolt::detail {

// JSON has no NaN/Inf; they travel as the strings "nan", "inf", "-inf".
inline nlohmann::ordered_json json_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

inline double json_number_from(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw DataError("bad numeric value '" + s + "'");
  }
  return j.get<double>();
}

}  // namespace bolt::detail
