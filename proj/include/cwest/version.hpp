#pragma once

namespace cwest {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace cwest
