#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lmforge/model_config.hpp"

namespace lmforge {

using TokenId = uint32_t;

/// Flat-buffer parameter layout. Offsets are element indices into the data
/// buffer; kNone marks tensors absent under the current config (biases off).
struct ParamLayout {
    static constexpr size_t kNone = static_cast<size_t>(-1);

    struct Layer {
        size_t ln1_gamma, ln1_beta;
        size_t wq, bq, wk, bk, wv, bv, wo, bo;
        size_t ln2_gamma, ln2_beta;
        size_t w_up, b_up, w_down, b_down;
    };

    struct TensorInfo {
        std::string name;
        std::vector<size_t> shape;
        size_t offset;
        size_t size;
    };

    size_t embed = 0; // [vocab x hidden]
    std::vector<Layer> layers;
    size_t lnf_gamma = 0, lnf_beta = 0;
    size_t head = 0; // [hidden x vocab], untied from embed
    size_t total_size = 0;
    std::vector<TensorInfo> manifest;

    static ParamLayout build(const ModelConfig& config);
};

/// All weights of the model in one flat buffer, with the input embedding and
/// the output projection stored disjointly (untied).
template <typename T>
struct ModelParams {
    ModelConfig config;
    ParamLayout layout;
    std::vector<T> data;

    T* at(size_t offset) { return data.data() + offset; }
    const T* at(size_t offset) const { return data.data() + offset; }

    std::span<T> tensor(std::string_view name);
    std::span<const T> tensor(std::string_view name) const;

    template <typename U>
    ModelParams<U> cast() const {
        ModelParams<U> out;
        out.config = config;
        out.layout = layout;
        out.data.assign(data.begin(), data.end());
        return out;
    }
};

/// normal(0, 0.02) matrices; per-layer output projections (attention out,
/// MLP down) scaled by 1/sqrt(2*num_layers); zero biases, beta and gamma
/// (LayerNorm1P's effective scale is 1+gamma).
template <typename T>
ModelParams<T> init_params(const ModelConfig& config, uint64_t seed);

// ---- elementary ops (exposed for tests) ----

/// x * Phi(x), exact erf form.
double gelu(double x);
/// d/dx gelu(x) = Phi(x) + x * phi(x).
double gelu_grad(double x);

/// y = (x - mean) / sqrt(var + eps) * (1 + gamma) + beta, biased variance.
template <typename T>
void layer_norm_1p(std::span<const T> x, std::span<const T> gamma, std::span<const T> beta,
                   double eps, std::span<T> y);

/// Rotates the first rotary_dims entries pairwise; pair i turns by
/// position * base^(-2i/rotary_dims). Remaining entries untouched.
template <typename T>
void rope_apply(std::span<T> vec, size_t position, size_t rotary_dims, double base);

/// Per head: softmax(q k^T / sqrt(head_dim) + causal mask) v.
/// q,k,v,out are [seq x heads x head_dim]; probs (optional) is
/// [heads x seq x seq] with masked entries zero.
template <typename T>
void causal_attention(std::span<const T> q, std::span<const T> k, std::span<const T> v,
                      size_t seq, size_t heads, size_t head_dim, std::span<T> out,
                      std::vector<T>* probs = nullptr);

// ---- full model ----

/// One pre-LN block: h = x + Attn(RoPE(proj(LN1P(x)))); y = h + MLP(LN1P(h)).
/// x is [seq x hidden]; layer_index selects the parameter set.
template <typename T>
std::vector<T> transformer_block(const ModelParams<T>& params, size_t layer_index,
                                 std::span<const T> x, size_t seq);

template <typename T>
struct ForwardCache; // defined in transformer.cpp; opaque to callers

/// logits [len(tokens) x vocab]. Throws on out-of-range ids or length.
template <typename T>
std::vector<T> forward(const ModelParams<T>& params, std::span<const TokenId> tokens);

/// Mean of -log softmax(logits)[target] over positions where mask is true
/// (empty mask = all positions). Throws if every position is masked.
template <typename T>
double cross_entropy_loss(std::span<const T> logits, std::span<const TokenId> targets,
                          size_t vocab, std::span<const uint8_t> mask = {});

struct LossStats {
    double loss_sum = 0.0;   // sum over unmasked positions
    size_t positions = 0;    // unmasked position count
    double mean() const { return positions ? loss_sum / static_cast<double>(positions) : 0.0; }
};

/// Analytic reverse-mode gradients of the POSITION-SUM loss, accumulated
/// into grad (shape-congruent flat buffer). Returns the sum and count so a
/// caller can form exact batch means.
template <typename T>
LossStats accumulate_loss_and_grads(const ModelParams<T>& params, std::span<const TokenId> tokens,
                                    std::span<const TokenId> targets,
                                    std::span<const uint8_t> mask, std::vector<T>& grad);

/// Mean loss and gradients of the mean for a single sequence.
template <typename T>
std::pair<double, std::vector<T>> loss_and_grads(const ModelParams<T>& params,
                                                 std::span<const TokenId> tokens,
                                                 std::span<const TokenId> targets,
                                                 std::span<const uint8_t> mask = {});

} // namespace lmforge
