#pragma once

namespace noisesearch {

inline constexpr const char* kToolName = "noisesearch";
inline constexpr const char* kToolVersion = "0.1.0";

}  // namespace noisesearch
