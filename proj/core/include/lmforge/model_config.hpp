#pragma once

#include <cstdint>
#include <string>

namespace lmforge {

/// Decoder-only transformer hyperparameters. Defaults are the desk-scale
/// configuration; the intermediate/hidden ratio follows the reference
/// 10880/4096 setup.
struct ModelConfig {
    uint32_t vocab_size = 4096;
    uint32_t seq_len = 256;
    uint32_t num_layers = 4;
    uint32_t hidden = 128;
    uint32_t intermediate = 340;
    uint32_t heads = 4;
    double rotary_fraction = 0.5; // fraction of each head's dims rotated
    double rope_base = 10000.0;
    double ln_epsilon = 1e-5;
    bool use_biases = true;

    uint32_t head_dim() const { return hidden / heads; }
    /// Rotated dims per head: floor(rotary_fraction * head_dim), made even.
    uint32_t rotary_dims() const {
        uint32_t r = static_cast<uint32_t>(rotary_fraction * head_dim());
        return r & ~1u;
    }

    void validate() const; // throws std::invalid_argument

    static ModelConfig from_json_file(const std::string& path);
    static ModelConfig from_json(const std::string& json_text);
    std::string to_json() const;
};

} // namespace lmforge
