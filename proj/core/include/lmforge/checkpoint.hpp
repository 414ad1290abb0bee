#pragma once

#include <string>

#include "lmforge/transformer.hpp"

namespace lmforge {

/// Checkpoint file: one JSON header line carrying the full model config and
/// a parameter manifest (name, shape, byte offset into the data section),
/// followed by raw little-endian 32-bit floats in manifest order.
template <typename T>
void save_checkpoint(const ModelParams<T>& params, const std::string& path);

template <typename T>
ModelParams<T> load_checkpoint(const std::string& path);

} // namespace lmforge
