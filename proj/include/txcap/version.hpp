#pragma once

#include <string>

#ifndef TXCAP_BUILD_ID
#define TXCAP_BUILD_ID "unknown"
#endif

namespace txcap {

inline constexpr const char* kVersion = "0.1.0";

/// Version plus the source revision the binary was configured from.
inline std::string version_string() { return std::string("txcap ") + kVersion + " (" + TXCAP_BUILD_ID + ")"; }

}  // namespace txcap
