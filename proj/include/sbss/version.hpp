#pragma once

namespace sbss {

inline constexpr const char* kVersion = "1.0.0";

} // namespace sbss
