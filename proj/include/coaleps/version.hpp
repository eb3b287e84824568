#pragma once

namespace coaleps {

inline constexpr const char* kArtifactVersion = "0.1.0";

}  // namespace coaleps
