#pragma once

namespace lmforge {

inline constexpr const char* kVersion = "0.1.0";

// File format versions. Bump only on incompatible layout changes.
inline constexpr const char* kTokenizerFormat = "bpe-v1";
inline constexpr const char* kPackedFormat = "pack-v1";
inline constexpr const char* kCheckpointFormat = "ckpt-v1";
inline constexpr const char* kTemplatesFormat = "templates-v1";

} // namespace lmforge
