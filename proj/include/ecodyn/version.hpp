#pragma once

namespace ecodyn {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace ecodyn
