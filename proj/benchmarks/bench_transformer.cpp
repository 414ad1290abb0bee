#include <benchmark/benchmark.h>

#include "lmforge/rng.hpp"
#include "lmforge/transformer.hpp"

using namespace lmforge;

namespace {

ModelConfig desk_config() {
    ModelConfig cfg;
    cfg.vocab_size = 4096;
    cfg.seq_len = 256;
    cfg.num_layers = 4;
    cfg.hidden = 128;
    cfg.intermediate = 340;
    cfg.heads = 4;
    return cfg;
}

std::vector<TokenId> random_tokens(const ModelConfig& cfg, size_t n) {
    Rng rng(1);
    std::vector<TokenId> tokens(n);
    for (auto& t : tokens) t = static_cast<TokenId>(rng.uniform_u64(cfg.vocab_size));
    return tokens;
}

} // namespace

static void BM_ForwardF32(benchmark::State& state) {
    ModelConfig cfg = desk_config();
    ModelParams<float> params = init_params<float>(cfg, 2);
    auto tokens = random_tokens(cfg, static_cast<size_t>(state.range(0)));
    for (auto _ : state) {
        auto logits = forward(params, std::span<const TokenId>(tokens));
        benchmark::DoNotOptimize(logits.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardF32)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_LossAndGradsF32(benchmark::State& state) {
    ModelConfig cfg = desk_config();
    ModelParams<float> params = init_params<float>(cfg, 2);
    size_t n = static_cast<size_t>(state.range(0));
    auto tokens = random_tokens(cfg, n + 1);
    std::vector<TokenId> inputs(tokens.begin(), tokens.end() - 1);
    std::vector<TokenId> targets(tokens.begin() + 1, tokens.end());
    std::vector<float> grad(params.layout.total_size);
    for (auto _ : state) {
        std::fill(grad.begin(), grad.end(), 0.0f);
        auto stats = accumulate_loss_and_grads<float>(params, inputs, targets, {}, grad);
        benchmark::DoNotOptimize(stats.loss_sum);
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LossAndGradsF32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
