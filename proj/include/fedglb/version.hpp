#pragma once

namespace fedglb {

inline constexpr const char* kLibraryVersion = "0.1.0";

}  // namespace fedglb
