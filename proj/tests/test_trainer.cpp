#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "lmforge/fixture.hpp"
#include "lmforge/trainer.hpp"

#include <json.hpp>

using namespace lmforge;

namespace {

TokenizerModel fixture_tokenizer() {
    static TokenizerModel model = [] {
        FixtureBundle fixture = generate_fixture({});
        return train_bpe(
            std::vector<Document>(fixture.seed.begin(), fixture.seed.begin() + 60), 512);
    }();
    return model;
}

ModelConfig small_model_config(uint32_t vocab) {
    ModelConfig cfg;
    cfg.vocab_size = vocab;
    cfg.seq_len = 64;
    cfg.num_layers = 2;
    cfg.hidden = 32;
    cfg.intermediate = 84;
    cfg.heads = 4;
    return cfg;
}

TrainConfig short_train(uint32_t steps, uint32_t batch) {
    TrainConfig c;
    c.peak_lr = 1e-3;
    c.min_lr = 1e-4;
    c.warmup_steps = 2;
    c.total_steps = steps;
    c.global_batch = batch;
    return c;
}

PackedDataset toy_dataset(const TokenizerModel& tok, size_t seq_len, size_t sequences) {
    FixtureBundle fixture = generate_fixture({});
    SequencePacker packer(seq_len, tok.eod_id());
    size_t i = 0;
    while (packer.sequences_emitted() < sequences) {
        packer.add_document(encode(tok, fixture.seed[i % fixture.seed.size()].text), 0);
        ++i;
    }
    auto seqs = packer.take_sequences();
    seqs.resize(sequences);
    PackedDataset ds;
    ds.header.seq_len = static_cast<uint32_t>(seq_len);
    ds.header.num_sequences = sequences;
    ds.header.eod_id = tok.eod_id();
    for (const auto& s : seqs) ds.tokens.insert(ds.tokens.end(), s.begin(), s.end());
    return ds;
}

} // namespace

TEST(BuildFinetuneExample, MaskCoversResponsePlusEod) {
    TokenizerModel tok = fixture_tokenizer();
    InstructRecord rec;
    rec.system = "הוראה כללית.";
    rec.prompt = "מה השעה?";
    rec.response = "שמונה בדיוק.";
    auto ex = build_finetune_example(rec, tok, "\n", 512);
    ASSERT_TRUE(ex.has_value());

    size_t masked = 0;
    for (uint8_t m : ex->token_mask) masked += m;
    EXPECT_EQ(masked, encode(tok, rec.response).size() + 1);
    EXPECT_EQ(ex->tokens.back(), tok.eod_id());
    EXPECT_EQ(ex->token_mask.back(), 1);

    // Decoding the unmasked prefix reproduces system + sep + prompt + sep.
    std::vector<TokenId> prefix;
    for (size_t i = 0; i < ex->tokens.size(); ++i)
        if (!ex->token_mask[i]) prefix.push_back(ex->tokens[i]);
    EXPECT_EQ(decode(tok, prefix), *rec.system + "\n" + rec.prompt + "\n");
}

TEST(BuildFinetuneExample, NoSystemSegment) {
    TokenizerModel tok = fixture_tokenizer();
    InstructRecord rec;
    rec.prompt = "שאלה?";
    rec.response = "תשובה.";
    auto ex = build_finetune_example(rec, tok, "\n", 512);
    ASSERT_TRUE(ex.has_value());
    std::vector<TokenId> prefix;
    for (size_t i = 0; i < ex->tokens.size(); ++i)
        if (!ex->token_mask[i]) prefix.push_back(ex->tokens[i]);
    EXPECT_EQ(decode(tok, prefix), rec.prompt + "\n");
    size_t masked = 0;
    for (uint8_t m : ex->token_mask) masked += m;
    EXPECT_EQ(masked, encode(tok, rec.response).size() + 1);
}

TEST(BuildFinetuneExample, TooLongIsSkipped) {
    TokenizerModel tok = fixture_tokenizer();
    InstructRecord rec;
    rec.prompt = std::string(400, 'x');
    rec.response = "y";
    EXPECT_FALSE(build_finetune_example(rec, tok, "\n", 16).has_value());
}

TEST(FinetuneMasking, PerturbingMaskedTargetLeavesLossUnchanged) {
    TokenizerModel tok = fixture_tokenizer();
    ModelConfig cfg = small_model_config(static_cast<uint32_t>(tok.vocab_size()));
    ModelParams<double> params = init_params<double>(cfg, 4);

    InstructRecord rec;
    rec.system = "מערכת.";
    rec.prompt = "שאלה קצרה?";
    rec.response = "תשובה קצרה.";
    auto ex = build_finetune_example(rec, tok, "\n", cfg.seq_len);
    ASSERT_TRUE(ex.has_value());

    size_t n = ex->tokens.size();
    std::vector<TokenId> inputs(ex->tokens.begin(), ex->tokens.end() - 1);
    std::vector<TokenId> targets(ex->tokens.begin() + 1, ex->tokens.end());
    std::vector<uint8_t> mask(ex->token_mask.begin() + 1, ex->token_mask.end());
    ASSERT_EQ(inputs.size(), n - 1);

    std::vector<double> g1(params.layout.total_size, 0.0);
    LossStats s1 = accumulate_loss_and_grads(params, std::span<const TokenId>(inputs),
                                             std::span<const TokenId>(targets),
                                             std::span<const uint8_t>(mask), g1);

    // Change a masked (prompt-side) target: the loss must not move at all.
    size_t masked_index = 0;
    while (mask[masked_index]) ++masked_index;
    std::vector<TokenId> perturbed = targets;
    perturbed[masked_index] = (perturbed[masked_index] + 3) % cfg.vocab_size;
    std::vector<double> g2(params.layout.total_size, 0.0);
    LossStats s2 = accumulate_loss_and_grads(params, std::span<const TokenId>(inputs),
                                             std::span<const TokenId>(perturbed),
                                             std::span<const uint8_t>(mask), g2);
    EXPECT_EQ(s1.loss_sum, s2.loss_sum);
    EXPECT_EQ(s1.positions, s2.positions);
    EXPECT_EQ(0, std::memcmp(g1.data(), g2.data(), g1.size() * sizeof(double)));
}

TEST(Pretrain, InitialLossNearLogVocab) {
    TokenizerModel tok = fixture_tokenizer();
    ModelConfig cfg = small_model_config(static_cast<uint32_t>(tok.vocab_size()));
    ModelParams<float> params = init_params<float>(cfg, 11);
    PackedDataset ds = toy_dataset(tok, cfg.seq_len, 4);

    std::vector<TokenId> inputs(ds.sequence(0), ds.sequence(0) + cfg.seq_len - 1);
    std::vector<TokenId> targets(ds.sequence(0) + 1, ds.sequence(0) + cfg.seq_len);
    auto logits = forward(params, std::span<const TokenId>(inputs));
    double loss = cross_entropy_loss<float>(logits, std::span<const TokenId>(targets),
                                            cfg.vocab_size);
    double expected = std::log(static_cast<double>(cfg.vocab_size));
    EXPECT_NEAR(loss, expected, 0.05 * expected);
}

TEST(Pretrain, DeterministicMetricsAndCheckpoints) {
    TokenizerModel tok = fixture_tokenizer();
    ModelConfig cfg = small_model_config(static_cast<uint32_t>(tok.vocab_size()));
    cfg.seq_len = 32;
    PackedDataset ds = toy_dataset(tok, cfg.seq_len, 6);
    TrainConfig tc = short_train(8, 2);

    std::vector<std::string> log1, log2;
    auto sink1 = [&](const StepMetrics& m) {
        log1.push_back(std::to_string(m.step) + ":" + std::to_string(m.loss) + ":" +
                       std::to_string(m.lr) + ":" + std::to_string(m.tokens));
    };
    auto sink2 = [&](const StepMetrics& m) {
        log2.push_back(std::to_string(m.step) + ":" + std::to_string(m.loss) + ":" +
                       std::to_string(m.lr) + ":" + std::to_string(m.tokens));
    };

    auto out1 = train_pretrain(init_params<float>(cfg, 11), ds, tc, sink1);
    auto out2 = train_pretrain(init_params<float>(cfg, 11), ds, tc, sink2);
    EXPECT_EQ(log1, log2);
    EXPECT_EQ(0, std::memcmp(out1.params.data.data(), out2.params.data.data(),
                             out1.params.data.size() * sizeof(float)));
    EXPECT_EQ(out1.steps, 8u);
}

TEST(Pretrain, LossDecreasesOnTinyCorpus) {
    TokenizerModel tok = fixture_tokenizer();
    ModelConfig cfg = small_model_config(static_cast<uint32_t>(tok.vocab_size()));
    cfg.seq_len = 32;
    PackedDataset ds = toy_dataset(tok, cfg.seq_len, 2);
    TrainConfig tc = short_train(40, 2);
    tc.peak_lr = 3e-3;

    double first = 0.0, last = 0.0;
    auto sink = [&](const StepMetrics& m) {
        if (m.step == 1) first = m.loss;
        last = m.loss;
    };
    train_pretrain(init_params<float>(cfg, 2), ds, tc, sink);
    EXPECT_LT(last, 0.6 * first);
}

TEST(Finetune, SkipsOverlongRecordsAndTrains) {
    TokenizerModel tok = fixture_tokenizer();
    ModelConfig cfg = small_model_config(static_cast<uint32_t>(tok.vocab_size()));
    cfg.seq_len = 48;

    std::vector<InstructRecord> records;
    for (int i = 0; i < 6; ++i) {
        InstructRecord rec;
        rec.system = "מערכת.";
        rec.prompt = "שאלה " + std::to_string(i) + "?";
        rec.response = "תשובה.";
        records.push_back(rec);
    }
    InstructRecord huge;
    huge.prompt = std::string(4000, 'q');
    huge.response = "x";
    records.push_back(huge);

    TrainConfig tc = short_train(4, 2);
    auto out = train_finetune(init_params<float>(cfg, 5), records, tok, tc, nullptr);
    EXPECT_EQ(out.skipped_records, 1u);
    EXPECT_EQ(out.steps, 4u);
}

TEST(MetricsWriterTest, EmitsJsonlWithAllFields) {
    auto dir = std::filesystem::temp_directory_path() / "lmforge_trainer_test";
    std::filesystem::create_directories(dir);
    std::string path = (dir / "metrics.jsonl").string();
    {
        MetricsWriter writer(path);
        StepMetrics m;
        m.step = 3;
        m.loss = 1.5;
        m.lr = 1e-4;
        m.tokens = 640;
        m.epoch = 0.5;
        writer(m);
    }
    std::ifstream in(path);
    std::string line;
    ASSERT_TRUE(std::getline(in, line));
    auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["step"], 3);
    EXPECT_DOUBLE_EQ(j["loss"].get<double>(), 1.5);
    EXPECT_TRUE(j.contains("lr"));
    EXPECT_TRUE(j.contains("tokens"));
    EXPECT_TRUE(j.contains("epoch"));
}

TEST(Generate, GreedyIsDeterministicAndTopK1Matches) {
    TokenizerModel tok = fixture_tokenizer();
    ModelConfig cfg = small_model_config(static_cast<uint32_t>(tok.vocab_size()));
    ModelParams<float> params = init_params<float>(cfg, 21);

    GenerateOptions greedy;
    greedy.temperature = 0.0;
    greedy.max_new = 12;
    std::string a = generate(params, tok, "שלום", greedy);
    std::string b = generate(params, tok, "שלום", greedy);
    EXPECT_EQ(a, b);

    GenerateOptions topk1;
    topk1.temperature = 0.7;
    topk1.top_k = 1;
    topk1.max_new = 12;
    EXPECT_EQ(generate(params, tok, "שלום", topk1), a);
}

TEST(Generate, Errors) {
    TokenizerModel tok = fixture_tokenizer();
    ModelConfig cfg = small_model_config(static_cast<uint32_t>(tok.vocab_size()));
    ModelParams<float> params = init_params<float>(cfg, 21);
    GenerateOptions opts;
    EXPECT_THROW(generate(params, tok, "", opts), std::invalid_argument);
    EXPECT_THROW(generate(params, tok, std::string(900, 'a'), opts), std::invalid_argument);
}
