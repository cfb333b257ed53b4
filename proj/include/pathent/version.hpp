#pragma once

namespace pathent {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace pathent
