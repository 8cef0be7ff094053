#pragma once

namespace flagsim {
inline constexpr const char* kVersion = "0.1.0";
}
