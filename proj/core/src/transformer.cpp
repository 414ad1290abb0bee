#include "lmforge/transformer.hpp"

#include "lmforge/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace lmforge {

namespace {

constexpr double kSqrt1_2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

template <typename T>
void check_span(size_t got, size_t want, const char* what) {
    if (got != want) throw std::invalid_argument(std::string(what) + ": size mismatch");
}

/// y[M x N] = x[M x K] * w[K x N], y pre-initialized (bias or zero).
template <typename T>
void matmul_add(const T* x, const T* w, T* y, size_t m_rows, size_t k_dim, size_t n_cols) {
    for (size_t m = 0; m < m_rows; ++m) {
        const T* xr = x + m * k_dim;
        T* yr = y + m * n_cols;
        for (size_t k = 0; k < k_dim; ++k) {
            T a = xr[k];
            if (a == T(0)) continue;
            const T* wr = w + k * n_cols;
            for (size_t n = 0; n < n_cols; ++n) yr[n] += a * wr[n];
        }
    }
}

/// dx[M x K] += dy[M x N] * w^T
template <typename T>
void matmul_grad_x(const T* dy, const T* w, T* dx, size_t m_rows, size_t k_dim, size_t n_cols) {
    for (size_t m = 0; m < m_rows; ++m) {
        const T* dyr = dy + m * n_cols;
        T* dxr = dx + m * k_dim;
        for (size_t k = 0; k < k_dim; ++k) {
            const T* wr = w + k * n_cols;
            T s = 0;
            for (size_t n = 0; n < n_cols; ++n) s += dyr[n] * wr[n];
            dxr[k] += s;
        }
    }
}

/// dw[K x N] += x^T * dy; db[N] += column sums of dy.
template <typename T>
void matmul_grad_w(const T* x, const T* dy, T* dw, T* db, size_t m_rows, size_t k_dim,
                   size_t n_cols) {
    for (size_t m = 0; m < m_rows; ++m) {
        const T* xr = x + m * k_dim;
        const T* dyr = dy + m * n_cols;
        for (size_t k = 0; k < k_dim; ++k) {
            T a = xr[k];
            if (a == T(0)) continue;
            T* dwr = dw + k * n_cols;
            for (size_t n = 0; n < n_cols; ++n) dwr[n] += a * dyr[n];
        }
        if (db)
            for (size_t n = 0; n < n_cols; ++n) db[n] += dyr[n];
    }
}

template <typename T>
void add_bias(T* y, const T* b, size_t m_rows, size_t n_cols) {
    if (!b) return;
    for (size_t m = 0; m < m_rows; ++m)
        for (size_t n = 0; n < n_cols; ++n) y[m * n_cols + n] += b[n];
}

} // namespace

// ---- layout ----

ParamLayout ParamLayout::build(const ModelConfig& config) {
    config.validate();
    ParamLayout layout;
    size_t offset = 0;
    auto add = [&](const std::string& name, std::vector<size_t> shape) {
        size_t size = 1;
        for (size_t d : shape) size *= d;
        layout.manifest.push_back({name, std::move(shape), offset, size});
        size_t at = offset;
        offset += size;
        return at;
    };
    const size_t H = config.hidden;
    const size_t I = config.intermediate;
    const size_t V = config.vocab_size;
    const bool biases = config.use_biases;

    layout.embed = add("embed", {V, H});
    layout.layers.resize(config.num_layers);
    for (size_t l = 0; l < config.num_layers; ++l) {
        std::string p = "layers." + std::to_string(l) + ".";
        Layer& L = layout.layers[l];
        L.ln1_gamma = add(p + "ln1.gamma", {H});
        L.ln1_beta = add(p + "ln1.beta", {H});
        L.wq = add(p + "attn.wq", {H, H});
        L.bq = biases ? add(p + "attn.bq", {H}) : kNone;
        L.wk = add(p + "attn.wk", {H, H});
        L.bk = biases ? add(p + "attn.bk", {H}) : kNone;
        L.wv = add(p + "attn.wv", {H, H});
        L.bv = biases ? add(p + "attn.bv", {H}) : kNone;
        L.wo = add(p + "attn.wo", {H, H});
        L.bo = biases ? add(p + "attn.bo", {H}) : kNone;
        L.ln2_gamma = add(p + "ln2.gamma", {H});
        L.ln2_beta = add(p + "ln2.beta", {H});
        L.w_up = add(p + "mlp.w_up", {H, I});
        L.b_up = biases ? add(p + "mlp.b_up", {I}) : kNone;
        L.w_down = add(p + "mlp.w_down", {I, H});
        L.b_down = biases ? add(p + "mlp.b_down", {H}) : kNone;
    }
    layout.lnf_gamma = add("final_norm.gamma", {H});
    layout.lnf_beta = add("final_norm.beta", {H});
    layout.head = add("head", {H, V});
    layout.total_size = offset;
    return layout;
}

template <typename T>
std::span<T> ModelParams<T>::tensor(std::string_view name) {
    for (const auto& info : layout.manifest)
        if (info.name == name) return {data.data() + info.offset, info.size};
    throw std::out_of_range("unknown parameter tensor: " + std::string(name));
}

template <typename T>
std::span<const T> ModelParams<T>::tensor(std::string_view name) const {
    for (const auto& info : layout.manifest)
        if (info.name == name) return {data.data() + info.offset, info.size};
    throw std::out_of_range("unknown parameter tensor: " + std::string(name));
}

template <typename T>
ModelParams<T> init_params(const ModelConfig& config, uint64_t seed) {
    ModelParams<T> params;
    params.config = config;
    params.layout = ParamLayout::build(config);
    params.data.assign(params.layout.total_size, T(0));

    Rng rng(seed);
    const double base_std = 0.02;
    const double resid_std = base_std / std::sqrt(2.0 * config.num_layers);

    auto fill = [&](size_t offset, size_t size, double std_dev) {
        T* ptr = params.data.data() + offset;
        for (size_t i = 0; i < size; ++i) ptr[i] = static_cast<T>(rng.normal() * std_dev);
    };
    const size_t H = config.hidden;
    const size_t I = config.intermediate;
    const size_t V = config.vocab_size;

    fill(params.layout.embed, V * H, base_std);
    for (const auto& L : params.layout.layers) {
        fill(L.wq, H * H, base_std);
        fill(L.wk, H * H, base_std);
        fill(L.wv, H * H, base_std);
        fill(L.wo, H * H, resid_std);
        fill(L.w_up, H * I, base_std);
        fill(L.w_down, I * H, resid_std);
    }
    fill(params.layout.head, H * V, base_std);
    return params;
}

// ---- elementary ops ----

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kSqrt1_2)); }

double gelu_grad(double x) {
    double phi_cdf = 0.5 * (1.0 + std::erf(x * kSqrt1_2));
    double phi_pdf = kInvSqrt2Pi * std::exp(-0.5 * x * x);
    return phi_cdf + x * phi_pdf;
}

namespace {

/// Row-wise LayerNorm1P forward with cached statistics.
template <typename T>
void ln1p_rows(const T* x, const T* gamma, const T* beta, double eps, size_t rows, size_t dim,
               T* y, T* mean_cache, T* inv_std_cache) {
    for (size_t r = 0; r < rows; ++r) {
        const T* xr = x + r * dim;
        T* yr = y + r * dim;
        double mean = 0.0;
        for (size_t i = 0; i < dim; ++i) mean += static_cast<double>(xr[i]);
        mean /= static_cast<double>(dim);
        double var = 0.0;
        for (size_t i = 0; i < dim; ++i) {
            double d = static_cast<double>(xr[i]) - mean;
            var += d * d;
        }
        var /= static_cast<double>(dim);
        double inv_std = 1.0 / std::sqrt(var + eps);
        if (mean_cache) mean_cache[r] = static_cast<T>(mean);
        if (inv_std_cache) inv_std_cache[r] = static_cast<T>(inv_std);
        for (size_t i = 0; i < dim; ++i) {
            double n = (static_cast<double>(xr[i]) - mean) * inv_std;
            yr[i] = static_cast<T>(n * (1.0 + static_cast<double>(gamma[i])) +
                                   static_cast<double>(beta[i]));
        }
    }
}

/// Backward of LayerNorm1P: accumulates dgamma/dbeta, adds dx into dx_out.
template <typename T>
void ln1p_rows_backward(const T* x, const T* gamma, const T* mean_cache, const T* inv_std_cache,
                        const T* dy, size_t rows, size_t dim, T* dx_out, T* dgamma, T* dbeta) {
    for (size_t r = 0; r < rows; ++r) {
        const T* xr = x + r * dim;
        const T* dyr = dy + r * dim;
        T* dxr = dx_out + r * dim;
        double mean = static_cast<double>(mean_cache[r]);
        double inv_std = static_cast<double>(inv_std_cache[r]);

        double dn_mean = 0.0;
        double dn_n_mean = 0.0;
        for (size_t i = 0; i < dim; ++i) {
            double n = (static_cast<double>(xr[i]) - mean) * inv_std;
            double dn = static_cast<double>(dyr[i]) * (1.0 + static_cast<double>(gamma[i]));
            dn_mean += dn;
            dn_n_mean += dn * n;
            dgamma[i] += static_cast<T>(static_cast<double>(dyr[i]) * n);
            dbeta[i] += dyr[i];
        }
        dn_mean /= static_cast<double>(dim);
        dn_n_mean /= static_cast<double>(dim);
        for (size_t i = 0; i < dim; ++i) {
            double n = (static_cast<double>(xr[i]) - mean) * inv_std;
            double dn = static_cast<double>(dyr[i]) * (1.0 + static_cast<double>(gamma[i]));
            dxr[i] += static_cast<T>((dn - dn_mean - n * dn_n_mean) * inv_std);
        }
    }
}

struct RopeTable {
    std::vector<double> cos_table; // [seq x rotary_dims/2]
    std::vector<double> sin_table;
    size_t pairs = 0;

    void build(size_t seq, size_t rotary_dims, double base) {
        pairs = rotary_dims / 2;
        cos_table.resize(seq * pairs);
        sin_table.resize(seq * pairs);
        for (size_t i = 0; i < pairs; ++i) {
            double freq = std::pow(base, -2.0 * static_cast<double>(i) /
                                             static_cast<double>(rotary_dims));
            for (size_t pos = 0; pos < seq; ++pos) {
                double angle = static_cast<double>(pos) * freq;
                cos_table[pos * pairs + i] = std::cos(angle);
                sin_table[pos * pairs + i] = std::sin(angle);
            }
        }
    }
};

/// In-place rotation of q/k laid out [seq x heads x head_dim].
template <typename T>
void rope_rows(T* qk, size_t seq, size_t heads, size_t head_dim, const RopeTable& table,
               bool inverse) {
    for (size_t pos = 0; pos < seq; ++pos) {
        for (size_t h = 0; h < heads; ++h) {
            T* vec = qk + (pos * heads + h) * head_dim;
            for (size_t i = 0; i < table.pairs; ++i) {
                double c = table.cos_table[pos * table.pairs + i];
                double s = table.sin_table[pos * table.pairs + i];
                if (inverse) s = -s;
                double v0 = static_cast<double>(vec[2 * i]);
                double v1 = static_cast<double>(vec[2 * i + 1]);
                vec[2 * i] = static_cast<T>(v0 * c - v1 * s);
                vec[2 * i + 1] = static_cast<T>(v0 * s + v1 * c);
            }
        }
    }
}

} // namespace

template <typename T>
void layer_norm_1p(std::span<const T> x, std::span<const T> gamma, std::span<const T> beta,
                   double eps, std::span<T> y) {
    check_span<T>(gamma.size(), x.size(), "layer_norm_1p gamma");
    check_span<T>(beta.size(), x.size(), "layer_norm_1p beta");
    check_span<T>(y.size(), x.size(), "layer_norm_1p output");
    ln1p_rows<T>(x.data(), gamma.data(), beta.data(), eps, 1, x.size(), y.data(), nullptr,
                 nullptr);
}

template <typename T>
void rope_apply(std::span<T> vec, size_t position, size_t rotary_dims, double base) {
    if (rotary_dims > vec.size())
        throw std::invalid_argument("rope_apply: rotary_dims exceeds vector size");
    if (rotary_dims % 2 != 0) throw std::invalid_argument("rope_apply: rotary_dims must be even");
    size_t pairs = rotary_dims / 2;
    for (size_t i = 0; i < pairs; ++i) {
        double freq =
            std::pow(base, -2.0 * static_cast<double>(i) / static_cast<double>(rotary_dims));
        double angle = static_cast<double>(position) * freq;
        double c = std::cos(angle);
        double s = std::sin(angle);
        double v0 = static_cast<double>(vec[2 * i]);
        double v1 = static_cast<double>(vec[2 * i + 1]);
        vec[2 * i] = static_cast<T>(v0 * c - v1 * s);
        vec[2 * i + 1] = static_cast<T>(v0 * s + v1 * c);
    }
}

template <typename T>
void causal_attention(std::span<const T> q, std::span<const T> k, std::span<const T> v,
                      size_t seq, size_t heads, size_t head_dim, std::span<T> out,
                      std::vector<T>* probs) {
    size_t expect = seq * heads * head_dim;
    check_span<T>(q.size(), expect, "causal_attention q");
    check_span<T>(k.size(), expect, "causal_attention k");
    check_span<T>(v.size(), expect, "causal_attention v");
    check_span<T>(out.size(), expect, "causal_attention out");
    if (probs) probs->assign(heads * seq * seq, T(0));

    const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));
    std::vector<double> row(seq);
    for (size_t h = 0; h < heads; ++h) {
        for (size_t i = 0; i < seq; ++i) {
            const T* qi = q.data() + (i * heads + h) * head_dim;
            double max_score = -1e300;
            for (size_t j = 0; j <= i; ++j) {
                const T* kj = k.data() + (j * heads + h) * head_dim;
                double s = 0.0;
                for (size_t d = 0; d < head_dim; ++d)
                    s += static_cast<double>(qi[d]) * static_cast<double>(kj[d]);
                row[j] = s * scale;
                if (row[j] > max_score) max_score = row[j];
            }
            double denom = 0.0;
            for (size_t j = 0; j <= i; ++j) {
                row[j] = std::exp(row[j] - max_score);
                denom += row[j];
            }
            T* oi = out.data() + (i * heads + h) * head_dim;
            for (size_t d = 0; d < head_dim; ++d) oi[d] = T(0);
            for (size_t j = 0; j <= i; ++j) {
                double p = row[j] / denom;
                if (probs) (*probs)[(h * seq + i) * seq + j] = static_cast<T>(p);
                const T* vj = v.data() + (j * heads + h) * head_dim;
                for (size_t d = 0; d < head_dim; ++d)
                    oi[d] += static_cast<T>(p * static_cast<double>(vj[d]));
            }
        }
    }
}

// ---- full model ----

template <typename T>
struct LayerCache {
    std::vector<T> input;      // [S x H]
    std::vector<T> ln1_out;    // [S x H]
    std::vector<T> ln1_mean, ln1_inv_std;
    std::vector<T> q, k, v;    // post-rope q/k, [S x H]
    std::vector<T> probs;      // [heads x S x S]
    std::vector<T> attn_concat;// [S x H]
    std::vector<T> resid1;     // [S x H]
    std::vector<T> ln2_out;    // [S x H]
    std::vector<T> ln2_mean, ln2_inv_std;
    std::vector<T> mlp_pre;    // [S x I]
    std::vector<T> mlp_act;    // [S x I]
};

template <typename T>
struct ForwardCache {
    std::vector<LayerCache<T>> layers;
    std::vector<T> final_in;
    std::vector<T> lnf_out;
    std::vector<T> lnf_mean, lnf_inv_std;
};

namespace {

/// Runs one block in place over x [S x H]; fills the cache when given.
template <typename T>
void run_layer(const ModelParams<T>& params, size_t layer_index, std::vector<T>& x, size_t S,
               const RopeTable& rope, LayerCache<T>* lc) {
    const ModelConfig& cfg = params.config;
    const size_t H = cfg.hidden;
    const size_t I = cfg.intermediate;
    const size_t heads = cfg.heads;
    const size_t D = cfg.head_dim();
    const auto& L = params.layout.layers[layer_index];

    if (lc) lc->input = x;

    std::vector<T> ln_out(S * H), mean(S), inv_std(S);
    ln1p_rows<T>(x.data(), params.at(L.ln1_gamma), params.at(L.ln1_beta), cfg.ln_epsilon, S, H,
                 ln_out.data(), mean.data(), inv_std.data());
    if (lc) {
        lc->ln1_out = ln_out;
        lc->ln1_mean = mean;
        lc->ln1_inv_std = inv_std;
    }

    std::vector<T> q(S * H, T(0)), k(S * H, T(0)), v(S * H, T(0));
    matmul_add(ln_out.data(), params.at(L.wq), q.data(), S, H, H);
    matmul_add(ln_out.data(), params.at(L.wk), k.data(), S, H, H);
    matmul_add(ln_out.data(), params.at(L.wv), v.data(), S, H, H);
    if (cfg.use_biases) {
        add_bias(q.data(), params.at(L.bq), S, H);
        add_bias(k.data(), params.at(L.bk), S, H);
        add_bias(v.data(), params.at(L.bv), S, H);
    }
    rope_rows(q.data(), S, heads, D, rope, false);
    rope_rows(k.data(), S, heads, D, rope, false);
    if (lc) {
        lc->q = q;
        lc->k = k;
        lc->v = v;
    }

    std::vector<T> ctx(S * H);
    causal_attention<T>(q, k, v, S, heads, D, ctx, lc ? &lc->probs : nullptr);
    if (lc) lc->attn_concat = ctx;

    std::vector<T> attn_out(S * H, T(0));
    matmul_add(ctx.data(), params.at(L.wo), attn_out.data(), S, H, H);
    if (cfg.use_biases) add_bias(attn_out.data(), params.at(L.bo), S, H);

    for (size_t i = 0; i < S * H; ++i) x[i] += attn_out[i];
    if (lc) lc->resid1 = x;

    ln1p_rows<T>(x.data(), params.at(L.ln2_gamma), params.at(L.ln2_beta), cfg.ln_epsilon, S, H,
                 ln_out.data(), mean.data(), inv_std.data());
    if (lc) {
        lc->ln2_out = ln_out;
        lc->ln2_mean = mean;
        lc->ln2_inv_std = inv_std;
    }

    std::vector<T> mlp_pre(S * I, T(0)), mlp_act(S * I);
    matmul_add(ln_out.data(), params.at(L.w_up), mlp_pre.data(), S, H, I);
    if (cfg.use_biases) add_bias(mlp_pre.data(), params.at(L.b_up), S, I);
    for (size_t i = 0; i < S * I; ++i)
        mlp_act[i] = static_cast<T>(gelu(static_cast<double>(mlp_pre[i])));
    if (lc) {
        lc->mlp_pre = mlp_pre;
        lc->mlp_act = mlp_act;
    }

    std::vector<T> mlp_out(S * H, T(0));
    matmul_add(mlp_act.data(), params.at(L.w_down), mlp_out.data(), S, I, H);
    if (cfg.use_biases) add_bias(mlp_out.data(), params.at(L.b_down), S, H);

    for (size_t i = 0; i < S * H; ++i) x[i] += mlp_out[i];
}

template <typename T>
std::vector<T> forward_impl(const ModelParams<T>& params, std::span<const TokenId> tokens,
                            ForwardCache<T>* cache) {
    const ModelConfig& cfg = params.config;
    const size_t S = tokens.size();
    const size_t H = cfg.hidden;
    const size_t V = cfg.vocab_size;

    if (S == 0) throw std::invalid_argument("forward: empty token sequence");
    if (S > cfg.seq_len) throw std::invalid_argument("forward: sequence longer than seq_len");
    for (TokenId t : tokens)
        if (t >= V) throw std::out_of_range("forward: token id out of range");

    RopeTable rope;
    rope.build(S, cfg.rotary_dims(), cfg.rope_base);

    if (cache) cache->layers.resize(cfg.num_layers);

    std::vector<T> x(S * H);
    for (size_t s = 0; s < S; ++s) {
        const T* row = params.at(params.layout.embed) + static_cast<size_t>(tokens[s]) * H;
        std::copy(row, row + H, x.data() + s * H);
    }

    std::vector<T> ln_out(S * H), mean(S), inv_std(S);

    for (size_t l = 0; l < cfg.num_layers; ++l)
        run_layer(params, l, x, S, rope, cache ? &cache->layers[l] : nullptr);

    if (cache) cache->final_in = x;
    ln1p_rows<T>(x.data(), params.at(params.layout.lnf_gamma), params.at(params.layout.lnf_beta),
                 cfg.ln_epsilon, S, H, ln_out.data(), mean.data(), inv_std.data());
    if (cache) {
        cache->lnf_out = ln_out;
        cache->lnf_mean = mean;
        cache->lnf_inv_std = inv_std;
    }

    std::vector<T> logits(S * V, T(0));
    matmul_add(ln_out.data(), params.at(params.layout.head), logits.data(), S, H, V);
    return logits;
}

} // namespace

template <typename T>
std::vector<T> forward(const ModelParams<T>& params, std::span<const TokenId> tokens) {
    return forward_impl(params, tokens, static_cast<ForwardCache<T>*>(nullptr));
}

template <typename T>
std::vector<T> transformer_block(const ModelParams<T>& params, size_t layer_index,
                                 std::span<const T> x, size_t seq) {
    if (layer_index >= params.config.num_layers)
        throw std::out_of_range("transformer_block: layer index");
    if (x.size() != seq * params.config.hidden)
        throw std::invalid_argument("transformer_block: input shape mismatch");
    RopeTable rope;
    rope.build(seq, params.config.rotary_dims(), params.config.rope_base);
    std::vector<T> out(x.begin(), x.end());
    run_layer(params, layer_index, out, seq, rope, static_cast<LayerCache<T>*>(nullptr));
    return out;
}

template <typename T>
double cross_entropy_loss(std::span<const T> logits, std::span<const TokenId> targets,
                          size_t vocab, std::span<const uint8_t> mask) {
    size_t S = targets.size();
    check_span<T>(logits.size(), S * vocab, "cross_entropy_loss logits");
    if (!mask.empty()) check_span<T>(mask.size(), S, "cross_entropy_loss mask");

    double loss_sum = 0.0;
    size_t count = 0;
    for (size_t s = 0; s < S; ++s) {
        if (!mask.empty() && !mask[s]) continue;
        if (targets[s] >= vocab) throw std::out_of_range("cross_entropy_loss: target id");
        const T* row = logits.data() + s * vocab;
        double max_logit = -1e300;
        for (size_t v = 0; v < vocab; ++v)
            max_logit = std::max(max_logit, static_cast<double>(row[v]));
        double denom = 0.0;
        for (size_t v = 0; v < vocab; ++v)
            denom += std::exp(static_cast<double>(row[v]) - max_logit);
        loss_sum += std::log(denom) - (static_cast<double>(row[targets[s]]) - max_logit);
        ++count;
    }
    if (count == 0) throw std::invalid_argument("cross_entropy_loss: all positions masked");
    return loss_sum / static_cast<double>(count);
}

template <typename T>
LossStats accumulate_loss_and_grads(const ModelParams<T>& params, std::span<const TokenId> tokens,
                                    std::span<const TokenId> targets,
                                    std::span<const uint8_t> mask, std::vector<T>& grad) {
    const ModelConfig& cfg = params.config;
    const size_t S = tokens.size();
    const size_t H = cfg.hidden;
    const size_t I = cfg.intermediate;
    const size_t V = cfg.vocab_size;
    const size_t heads = cfg.heads;
    const size_t D = cfg.head_dim();

    check_span<T>(targets.size(), S, "targets");
    if (!mask.empty()) check_span<T>(mask.size(), S, "mask");
    if (grad.size() != params.layout.total_size)
        throw std::invalid_argument("gradient buffer not congruent with parameters");

    ForwardCache<T> cache;
    std::vector<T> logits = forward_impl(params, tokens, &cache);

    // Loss (position sum) and dlogits.
    LossStats stats;
    std::vector<T> dlogits(S * V, T(0));
    for (size_t s = 0; s < S; ++s) {
        if (!mask.empty() && !mask[s]) continue;
        if (targets[s] >= V) throw std::out_of_range("loss targets: id out of range");
        const T* row = logits.data() + s * V;
        T* drow = dlogits.data() + s * V;
        double max_logit = -1e300;
        for (size_t v = 0; v < V; ++v)
            max_logit = std::max(max_logit, static_cast<double>(row[v]));
        double denom = 0.0;
        for (size_t v = 0; v < V; ++v)
            denom += std::exp(static_cast<double>(row[v]) - max_logit);
        for (size_t v = 0; v < V; ++v) {
            double p = std::exp(static_cast<double>(row[v]) - max_logit) / denom;
            drow[v] = static_cast<T>(p);
        }
        drow[targets[s]] -= T(1);
        stats.loss_sum += std::log(denom) - (static_cast<double>(row[targets[s]]) - max_logit);
        stats.positions++;
    }
    if (stats.positions == 0)
        throw std::invalid_argument("loss_and_grads: all positions masked");

    RopeTable rope;
    rope.build(S, cfg.rotary_dims(), cfg.rope_base);

    // Head and final norm.
    std::vector<T> d_lnf_out(S * H, T(0));
    matmul_grad_w(cache.lnf_out.data(), dlogits.data(), grad.data() + params.layout.head,
                  static_cast<T*>(nullptr), S, H, V);
    matmul_grad_x(dlogits.data(), params.at(params.layout.head), d_lnf_out.data(), S, H, V);

    std::vector<T> dx(S * H, T(0));
    ln1p_rows_backward(cache.final_in.data(), params.at(params.layout.lnf_gamma),
                       cache.lnf_mean.data(), cache.lnf_inv_std.data(), d_lnf_out.data(), S, H,
                       dx.data(), grad.data() + params.layout.lnf_gamma,
                       grad.data() + params.layout.lnf_beta);

    std::vector<T> d_mlp_act(S * I), d_mlp_pre(S * I), d_ln2(S * H), d_resid1(S * H);
    std::vector<T> d_ctx(S * H), d_q(S * H), d_k(S * H), d_v(S * H), d_ln1(S * H);
    std::vector<double> dprob_row;

    for (size_t li = cfg.num_layers; li-- > 0;) {
        const auto& L = params.layout.layers[li];
        LayerCache<T>& lc = cache.layers[li];

        // dx holds the gradient at the layer output = resid1 + mlp_out.
        std::fill(d_mlp_act.begin(), d_mlp_act.end(), T(0));
        matmul_grad_w(lc.mlp_act.data(), dx.data(), grad.data() + L.w_down,
                      cfg.use_biases ? grad.data() + L.b_down : nullptr, S, I, H);
        matmul_grad_x(dx.data(), params.at(L.w_down), d_mlp_act.data(), S, I, H);

        for (size_t i = 0; i < S * I; ++i)
            d_mlp_pre[i] = static_cast<T>(static_cast<double>(d_mlp_act[i]) *
                                          gelu_grad(static_cast<double>(lc.mlp_pre[i])));

        std::fill(d_ln2.begin(), d_ln2.end(), T(0));
        matmul_grad_w(lc.ln2_out.data(), d_mlp_pre.data(), grad.data() + L.w_up,
                      cfg.use_biases ? grad.data() + L.b_up : nullptr, S, H, I);
        matmul_grad_x(d_mlp_pre.data(), params.at(L.w_up), d_ln2.data(), S, H, I);

        // d_resid1 = dx (residual) + LN2 backward contribution.
        d_resid1 = dx;
        ln1p_rows_backward(lc.resid1.data(), params.at(L.ln2_gamma), lc.ln2_mean.data(),
                           lc.ln2_inv_std.data(), d_ln2.data(), S, H, d_resid1.data(),
                           grad.data() + L.ln2_gamma, grad.data() + L.ln2_beta);

        // Attention output projection.
        std::fill(d_ctx.begin(), d_ctx.end(), T(0));
        matmul_grad_w(lc.attn_concat.data(), d_resid1.data(), grad.data() + L.wo,
                      cfg.use_biases ? grad.data() + L.bo : nullptr, S, H, H);
        matmul_grad_x(d_resid1.data(), params.at(L.wo), d_ctx.data(), S, H, H);

        // Attention core backward.
        std::fill(d_q.begin(), d_q.end(), T(0));
        std::fill(d_k.begin(), d_k.end(), T(0));
        std::fill(d_v.begin(), d_v.end(), T(0));
        const double scale = 1.0 / std::sqrt(static_cast<double>(D));
        dprob_row.resize(S);
        for (size_t h = 0; h < heads; ++h) {
            for (size_t i = 0; i < S; ++i) {
                const T* dctx_i = d_ctx.data() + (i * heads + h) * D;
                const T* probs_i = lc.probs.data() + (h * S + i) * S;
                // dprobs and dv.
                double dot_sum = 0.0;
                for (size_t j = 0; j <= i; ++j) {
                    const T* vj = lc.v.data() + (j * heads + h) * D;
                    double dp = 0.0;
                    for (size_t d = 0; d < D; ++d)
                        dp += static_cast<double>(dctx_i[d]) * static_cast<double>(vj[d]);
                    dprob_row[j] = dp;
                    dot_sum += dp * static_cast<double>(probs_i[j]);
                    T* dvj = d_v.data() + (j * heads + h) * D;
                    double p = static_cast<double>(probs_i[j]);
                    for (size_t d = 0; d < D; ++d)
                        dvj[d] += static_cast<T>(p * static_cast<double>(dctx_i[d]));
                }
                // dscores -> dq, dk.
                const T* qi = lc.q.data() + (i * heads + h) * D;
                T* dqi = d_q.data() + (i * heads + h) * D;
                for (size_t j = 0; j <= i; ++j) {
                    double p = static_cast<double>(probs_i[j]);
                    double dscore = p * (dprob_row[j] - dot_sum) * scale;
                    if (dscore == 0.0) continue;
                    const T* kj = lc.k.data() + (j * heads + h) * D;
                    T* dkj = d_k.data() + (j * heads + h) * D;
                    for (size_t d = 0; d < D; ++d) {
                        dqi[d] += static_cast<T>(dscore * static_cast<double>(kj[d]));
                        dkj[d] += static_cast<T>(dscore * static_cast<double>(qi[d]));
                    }
                }
            }
        }

        // Undo the rotations (transpose of a rotation is its inverse).
        rope_rows(d_q.data(), S, heads, D, rope, true);
        rope_rows(d_k.data(), S, heads, D, rope, true);

        std::fill(d_ln1.begin(), d_ln1.end(), T(0));
        matmul_grad_w(lc.ln1_out.data(), d_q.data(), grad.data() + L.wq,
                      cfg.use_biases ? grad.data() + L.bq : nullptr, S, H, H);
        matmul_grad_x(d_q.data(), params.at(L.wq), d_ln1.data(), S, H, H);
        matmul_grad_w(lc.ln1_out.data(), d_k.data(), grad.data() + L.wk,
                      cfg.use_biases ? grad.data() + L.bk : nullptr, S, H, H);
        matmul_grad_x(d_k.data(), params.at(L.wk), d_ln1.data(), S, H, H);
        matmul_grad_w(lc.ln1_out.data(), d_v.data(), grad.data() + L.wv,
                      cfg.use_biases ? grad.data() + L.bv : nullptr, S, H, H);
        matmul_grad_x(d_v.data(), params.at(L.wv), d_ln1.data(), S, H, H);

        // dx for the layer input: residual passthrough + LN1 backward.
        dx = d_resid1;
        ln1p_rows_backward(lc.input.data(), params.at(L.ln1_gamma), lc.ln1_mean.data(),
                           lc.ln1_inv_std.data(), d_ln1.data(), S, H, dx.data(),
                           grad.data() + L.ln1_gamma, grad.data() + L.ln1_beta);
    }

    // Embedding rows.
    for (size_t s = 0; s < S; ++s) {
        T* row = grad.data() + params.layout.embed + static_cast<size_t>(tokens[s]) * H;
        const T* dxs = dx.data() + s * H;
        for (size_t i = 0; i < H; ++i) row[i] += dxs[i];
    }
    return stats;
}

template <typename T>
std::pair<double, std::vector<T>> loss_and_grads(const ModelParams<T>& params,
                                                 std::span<const TokenId> tokens,
                                                 std::span<const TokenId> targets,
                                                 std::span<const uint8_t> mask) {
    std::vector<T> grad(params.layout.total_size, T(0));
    LossStats stats = accumulate_loss_and_grads(params, tokens, targets, mask, grad);
    T count = static_cast<T>(stats.positions);
    for (auto& g : grad) g /= count;
    return {stats.mean(), std::move(grad)};
}

// ---- explicit instantiations ----

template struct ModelParams<float>;
template struct ModelParams<double>;

template ModelParams<float> init_params<float>(const ModelConfig&, uint64_t);
template ModelParams<double> init_params<double>(const ModelConfig&, uint64_t);

template void layer_norm_1p<float>(std::span<const float>, std::span<const float>,
                                   std::span<const float>, double, std::span<float>);
template void layer_norm_1p<double>(std::span<const double>, std::span<const double>,
                                    std::span<const double>, double, std::span<double>);

template void rope_apply<float>(std::span<float>, size_t, size_t, double);
template void rope_apply<double>(std::span<double>, size_t, size_t, double);

template void causal_attention<float>(std::span<const float>, std::span<const float>,
                                      std::span<const float>, size_t, size_t, size_t,
                                      std::span<float>, std::vector<float>*);
template void causal_attention<double>(std::span<const double>, std::span<const double>,
                                       std::span<const double>, size_t, size_t, size_t,
                                       std::span<double>, std::vector<double>*);

template std::vector<float> forward<float>(const ModelParams<float>&, std::span<const TokenId>);
template std::vector<double> forward<double>(const ModelParams<double>&,
                                             std::span<const TokenId>);

template std::vector<float> transformer_block<float>(const ModelParams<float>&, size_t,
                                                     std::span<const float>, size_t);
template std::vector<double> transformer_block<double>(const ModelParams<double>&, size_t,
                                                       std::span<const double>, size_t);

template double cross_entropy_loss<float>(std::span<const float>, std::span<const TokenId>,
                                          size_t, std::span<const uint8_t>);
template double cross_entropy_loss<double>(std::span<const double>, std::span<const TokenId>,
                                           size_t, std::span<const uint8_t>);

template LossStats accumulate_loss_and_grads<float>(const ModelParams<float>&,
                                                    std::span<const TokenId>,
                                                    std::span<const TokenId>,
                                                    std::span<const uint8_t>,
                                                    std::vector<float>&);
template LossStats accumulate_loss_and_grads<double>(const ModelParams<double>&,
                                                     std::span<const TokenId>,
                                                     std::span<const TokenId>,
                                                     std::span<const uint8_t>,
                                                     std::vector<double>&);

template std::pair<double, std::vector<float>> loss_and_grads<float>(const ModelParams<float>&,
                                                                     std::span<const TokenId>,
                                                                     std::span<const TokenId>,
                                                                     std::span<const uint8_t>);
template std::pair<double, std::vector<double>> loss_and_grads<double>(
    const ModelParams<double>&, std::span<const TokenId>, std::span<const TokenId>,
    std::span<const uint8_t>);

} // namespace lmforge
