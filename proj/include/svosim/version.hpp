#pragma once

namespace svosim {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace svosim
