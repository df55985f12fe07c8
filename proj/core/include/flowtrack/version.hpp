#pragma once

namespace flowtrack {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace flowtrack
