#pragma once

namespace liftrec {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace liftrec
