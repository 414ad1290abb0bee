#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace lmforge {

/// Optimization hyperparameters; defaults follow the reference training
/// setup (peak 1.6e-4, floor 1e-5, 750 warmup steps, betas 0.9/0.95,
/// global batch 128).
struct TrainConfig {
    double peak_lr = 1.6e-4;
    double min_lr = 1e-5;
    uint32_t warmup_steps = 750;
    uint32_t total_steps = 10000;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double adam_eps = 1e-8;
    uint32_t global_batch = 128;
    uint64_t seed = 0;
    std::optional<double> grad_clip; // global-norm clip, off by default
    uint32_t checkpoint_interval = 0; // 0 = final checkpoint only
    std::string separator = "\n";     // between system/prompt/response segments
    std::string dtype = "f32";        // "f32" | "f64"

    void validate() const;

    static TrainConfig from_json_file(const std::string& path);
    static TrainConfig from_json(const std::string& json_text);
    std::string to_json() const;
};

/// Linear warmup from zero to peak_lr over warmup_steps, then cosine
/// annealing from peak_lr to min_lr at total_steps. Exact at both
/// boundaries; step outside [0, total_steps] throws.
double lr_at(uint64_t step, const TrainConfig& config);

} // namespace lmforge
