#pragma once

namespace gnt {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace gnt
