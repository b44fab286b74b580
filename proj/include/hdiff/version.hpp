#pragma once

namespace hdiff {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace hdiff
