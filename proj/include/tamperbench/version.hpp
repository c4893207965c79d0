#pragma once

namespace tamperbench {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tamperbench
