#pragma once

namespace lbcf {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace lbcf
