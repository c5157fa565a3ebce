#pragma once

namespace cdcr {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cdcr
