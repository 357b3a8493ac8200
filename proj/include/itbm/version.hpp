#pragma once

#define ITBM_VERSION_MAJOR 1
#define ITBM_VERSION_MINOR 0
#define ITBM_VERSION_PATCH 0

namespace itbm {

inline constexpr const char* version() { return "1.0.0"; }

}  // namespace itbm
