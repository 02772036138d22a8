#pragma once

namespace opo::constants {

// Exact SI definition; air index is taken as exactly 1 throughout.
inline constexpr double speed_of_light = 299'792'458.0;  // m/s

inline constexpr double pi = 3.14159265358979323846;

}  // namespace opo::constants
