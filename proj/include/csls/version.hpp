#pragma once

namespace csls {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace csls
