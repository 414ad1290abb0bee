#include <benchmark/benchmark.h>

#include "lmforge/char_lm.hpp"
#include "lmforge/cleaner.hpp"
#include "lmforge/fixture.hpp"

using namespace lmforge;

namespace {

const FixtureBundle& fixture() {
    static FixtureBundle bundle = generate_fixture({});
    return bundle;
}

const CleaningModel& model() {
    static CleaningModel m = CleaningModel::build(fixture().seed, CleaningConfig{});
    return m;
}

} // namespace

static void BM_ReduceForeign(benchmark::State& state) {
    for (auto _ : state) {
        for (const auto& doc : fixture().modern_raw) {
            auto r = reduce_foreign(doc.text);
            benchmark::DoNotOptimize(r.text.data());
        }
    }
}
BENCHMARK(BM_ReduceForeign)->Unit(benchmark::kMillisecond);

static void BM_SentencePerplexity(benchmark::State& state) {
    const CharLm& lm = model().lm;
    for (auto _ : state) {
        for (const auto& doc : fixture().seed) {
            double p = lm.sentence_perplexity(doc.text);
            benchmark::DoNotOptimize(p);
        }
    }
}
BENCHMARK(BM_SentencePerplexity)->Unit(benchmark::kMillisecond);

static void BM_CleanCorpus(benchmark::State& state) {
    CleaningConfig config;
    for (auto _ : state) {
        CleaningResult r = clean_corpus(fixture().modern_raw, model(), config,
                                        static_cast<int>(state.range(0)));
        benchmark::DoNotOptimize(r.report.kept_docs);
    }
}
BENCHMARK(BM_CleanCorpus)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
