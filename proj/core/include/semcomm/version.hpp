#pragma once

namespace semcomm {

inline constexpr const char* kVersion = "0.1.0";

}  // namespace semcomm
