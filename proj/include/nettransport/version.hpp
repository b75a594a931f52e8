#pragma once

namespace nettransport {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nettransport
