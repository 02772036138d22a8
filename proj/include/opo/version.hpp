#pragma once

namespace opo {

inline constexpr const char* tool_name = "opotk";
inline constexpr const char* tool_version = "1.0.0";

}  // namespace opo
