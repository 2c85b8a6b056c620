#pragma once

namespace railloc {

inline constexpr const char* kToolName = "railloc";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace railloc
