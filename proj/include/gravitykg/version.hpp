#pragma once

namespace gravitykg {

inline constexpr const char* kVersion = "0.1.0";

} // namespace gravitykg
