#pragma once

namespace nwdlens {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace nwdlens
