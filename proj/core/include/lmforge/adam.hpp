#pragma once

#include <cstdint>
#include <vector>

#include "lmforge/schedule.hpp"

namespace lmforge {

/// Adam first/second moments, shape-congruent with the flat parameter
/// buffer; t counts completed steps.
template <typename T>
struct AdamState {
    std::vector<T> m;
    std::vector<T> v;
    uint64_t t = 0;

    explicit AdamState(size_t size = 0) : m(size, T(0)), v(size, T(0)) {}
};

/// One bias-corrected Adam step:
///   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
/// Throws std::runtime_error naming the parameter index on a non-finite
/// gradient; pass `names` to resolve indices to tensor names in the message.
template <typename T>
void adam_step(std::vector<T>& params, const std::vector<T>& grads, AdamState<T>& state,
               double lr, const TrainConfig& config,
               const std::vector<std::pair<std::string, size_t>>* names = nullptr);

/// Scales grads in place so the global L2 norm is at most max_norm.
template <typename T>
double clip_global_norm(std::vector<T>& grads, double max_norm);

} // namespace lmforge
