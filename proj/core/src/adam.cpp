#include "lmforge/adam.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace lmforge {

namespace {

std::string locate(size_t index, const std::vector<std::pair<std::string, size_t>>* names) {
    if (!names) return "flat index " + std::to_string(index);
    // names: (tensor name, first flat index past the tensor), ascending.
    for (const auto& [name, end] : *names)
        if (index < end) return name;
    return "flat index " + std::to_string(index);
}

} // namespace

template <typename T>
void adam_step(std::vector<T>& params, const std::vector<T>& grads, AdamState<T>& state,
               double lr, const TrainConfig& config,
               const std::vector<std::pair<std::string, size_t>>* names) {
    if (params.size() != grads.size() || params.size() != state.m.size() ||
        params.size() != state.v.size())
        throw std::invalid_argument("adam_step: shape mismatch");

    state.t += 1;
    const double b1 = config.beta1;
    const double b2 = config.beta2;
    const double bc1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(b2, static_cast<double>(state.t));

    for (size_t i = 0; i < params.size(); ++i) {
        double g = static_cast<double>(grads[i]);
        if (!std::isfinite(g))
            throw std::runtime_error("adam_step: non-finite gradient in " + locate(i, names));
        double m = b1 * static_cast<double>(state.m[i]) + (1.0 - b1) * g;
        double v = b2 * static_cast<double>(state.v[i]) + (1.0 - b2) * g * g;
        state.m[i] = static_cast<T>(m);
        state.v[i] = static_cast<T>(v);
        double m_hat = m / bc1;
        double v_hat = v / bc2;
        params[i] = static_cast<T>(static_cast<double>(params[i]) -
                                   lr * m_hat / (std::sqrt(v_hat) + config.adam_eps));
    }
}

template <typename T>
double clip_global_norm(std::vector<T>& grads, double max_norm) {
    double sq = 0.0;
    for (const T& g : grads) sq += static_cast<double>(g) * static_cast<double>(g);
    double norm = std::sqrt(sq);
    if (norm > max_norm && norm > 0.0) {
        double scale = max_norm / norm;
        for (T& g : grads) g = static_cast<T>(static_cast<double>(g) * scale);
    }
    return norm;
}

template void adam_step<float>(std::vector<float>&, const std::vector<float>&, AdamState<float>&,
                               double, const TrainConfig&,
                               const std::vector<std::pair<std::string, size_t>>*);
template void adam_step<double>(std::vector<double>&, const std::vector<double>&,
                                AdamState<double>&, double, const TrainConfig&,
                                const std::vector<std::pair<std::string, size_t>>*);
template double clip_global_norm<float>(std::vector<float>&, double);
template double clip_global_norm<double>(std::vector<double>&, double);

} // namespace lmforge
