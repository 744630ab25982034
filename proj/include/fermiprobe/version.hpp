#pragma once

namespace fermiprobe {
inline constexpr const char* version_string = "fermiprobe 0.1.0";
}
