#pragma once

namespace nds {

inline constexpr const char* kToolVersion = "1.0.0";

}  // namespace nds
