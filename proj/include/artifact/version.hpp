#pragma once

namespace artifact {

inline constexpr const char* kToolVersion = "0.1.0";

// File format versions. Bump on incompatible layout changes.
inline constexpr int kManifestFormatVersion = 1;
inline constexpr int kFoldsFormatVersion = 1;
inline constexpr int kCheckpointFormatVersion = 1;

}  // namespace artifact
