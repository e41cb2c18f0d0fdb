#pragma once

namespace jumpdiff {

inline constexpr const char* kVersion = "1.0.0";

} // namespace jumpdiff
