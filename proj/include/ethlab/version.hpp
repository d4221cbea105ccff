#pragma once

namespace ethlab {

inline constexpr const char* kArtifactVersion = "0.1.0";

}  // namespace ethlab
