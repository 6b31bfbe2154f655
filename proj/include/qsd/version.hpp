#pragma once

namespace qsd {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace qsd
