#include <benchmark/benchmark.h>

#include "lmforge/bpe.hpp"
#include "lmforge/fixture.hpp"

using namespace lmforge;

namespace {

const FixtureBundle& fixture() {
    static FixtureBundle bundle = generate_fixture({});
    return bundle;
}

const TokenizerModel& tokenizer() {
    static TokenizerModel model = train_bpe(fixture().seed, 2048);
    return model;
}

} // namespace

static void BM_TrainBpe(benchmark::State& state) {
    std::vector<Document> corpus(fixture().seed.begin(),
                                 fixture().seed.begin() + state.range(0));
    for (auto _ : state) {
        TokenizerModel model = train_bpe(corpus, 1024);
        benchmark::DoNotOptimize(model.merges.data());
    }
}
BENCHMARK(BM_TrainBpe)->Arg(32)->Arg(128)->Unit(benchmark::kMillisecond);

static void BM_Encode(benchmark::State& state) {
    const TokenizerModel& model = tokenizer();
    size_t bytes = 0;
    for (auto _ : state) {
        for (const auto& doc : fixture().seed) {
            auto ids = encode(model, doc.text);
            benchmark::DoNotOptimize(ids.data());
            bytes += doc.text.size();
        }
    }
    state.SetBytesProcessed(static_cast<int64_t>(bytes));
}
BENCHMARK(BM_Encode)->Unit(benchmark::kMillisecond);

static void BM_Decode(benchmark::State& state) {
    const TokenizerModel& model = tokenizer();
    std::vector<std::vector<TokenId>> encoded;
    for (const auto& doc : fixture().seed) encoded.push_back(encode(model, doc.text));
    for (auto _ : state) {
        for (const auto& ids : encoded) {
            auto text = decode(model, ids);
            benchmark::DoNotOptimize(text.data());
        }
    }
}
BENCHMARK(BM_Decode)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
