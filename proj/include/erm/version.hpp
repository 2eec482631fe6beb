#pragma once

namespace erm {

inline constexpr const char* version = "0.1.0";

} // namespace erm
