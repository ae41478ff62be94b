#pragma once

#include <string>

#include <json.hpp>

namespace csls {

using Json = nlohmann::ordered_json;

/// Serializes with insertion-ordered keys and every floating-point number
/// rendered at 17 significant digits, so equal values give equal bytes.
/// Non-finite floats are written as null.
std::string dump_json(const Json& value, int indent = 2);

}  // namespace csls
