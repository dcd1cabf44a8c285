#pragma once

namespace pcamix {

inline constexpr const char* kVersion = "0.1.0";

} // namespace pcamix
