#pragma once

namespace wmgof {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace wmgof
