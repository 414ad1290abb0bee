#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>

#include "lmforge/bpe.hpp"
#include "lmforge/fixture.hpp"
#include "lmforge/rng.hpp"
#include "lmforge/utf8.hpp"

using namespace lmforge;

namespace {

/// Independent oracle: brute-force pair counts over the same pre-tokens.
std::map<std::pair<std::string, std::string>, int64_t> brute_force_pairs(
    const std::vector<std::string>& texts) {
    std::map<std::pair<std::string, std::string>, int64_t> counts;
    for (const auto& text : texts) {
        for (const auto& word : pre_tokenize(text)) {
            for (size_t i = 0; i + 1 < word.size(); ++i) {
                counts[{std::string(1, word[i]), std::string(1, word[i + 1])}]++;
            }
        }
    }
    return counts;
}

std::string random_unicode_string(Rng& rng) {
    std::string out;
    size_t n = rng.uniform_u64(60);
    for (size_t i = 0; i < n; ++i) {
        uint64_t kind = rng.uniform_u64(5);
        char32_t cp;
        switch (kind) {
            case 0: cp = 0x05D0 + rng.uniform_u64(27); break;        // Hebrew
            case 1: cp = 0x20 + rng.uniform_u64(0x5F); break;        // ASCII
            case 2: cp = 0x0400 + rng.uniform_u64(0x100); break;     // Cyrillic
            case 3: cp = 0x1F300 + rng.uniform_u64(0x100); break;    // emoji plane
            default: cp = 1 + rng.uniform_u64(0xD7FF); break;        // BMP no surrogates
        }
        append_utf8(out, cp);
    }
    return out;
}

} // namespace

TEST(PreTokenize, LosslessWithLeadingSpaceMarker) {
    auto toks = pre_tokenize("aaab aaab");
    ASSERT_EQ(toks.size(), 2u);
    EXPECT_EQ(toks[0], "aaab");
    EXPECT_EQ(toks[1], " aaab");

    toks = pre_tokenize("a  b");
    ASSERT_EQ(toks.size(), 3u);
    EXPECT_EQ(toks[0], "a");
    EXPECT_EQ(toks[1], " ");
    EXPECT_EQ(toks[2], " b");

    Rng rng(9);
    for (int i = 0; i < 2000; ++i) {
        std::string text = random_unicode_string(rng);
        std::string joined;
        for (const auto& t : pre_tokenize(text)) joined += t;
        EXPECT_EQ(joined, text);
    }
}

TEST(TrainBpe, FirstMergeMatchesBruteForceOracle) {
    std::vector<std::string> corpus = {"aaab aaab"};
    auto oracle = brute_force_pairs(corpus);
    EXPECT_EQ((oracle[{"a", "a"}]), 4);
    EXPECT_EQ((oracle[{"a", "b"}]), 2);

    TokenizerModel model = train_bpe(corpus, 256 + 3 + 1);
    ASSERT_EQ(model.merges.size(), 1u);
    EXPECT_EQ(model.merges[0].first, TokenId('a'));
    EXPECT_EQ(model.merges[0].second, TokenId('a'));
    EXPECT_EQ(model.vocab[256 + 3], "aa");
}

TEST(TrainBpe, ZeroMergeBudgetFallsBackToBytes) {
    TokenizerModel model = train_bpe(std::vector<std::string>{"hello"}, 256 + 3);
    EXPECT_TRUE(model.merges.empty());
    auto ids = encode(model, "hi");
    ASSERT_EQ(ids.size(), 2u);
    EXPECT_EQ(ids[0], TokenId('h'));
    EXPECT_EQ(ids[1], TokenId('i'));
}

TEST(TrainBpe, Errors) {
    EXPECT_THROW(train_bpe(std::vector<std::string>{}, 4096), std::invalid_argument);
    EXPECT_THROW(train_bpe(std::vector<std::string>{""}, 4096), std::invalid_argument);
    EXPECT_THROW(train_bpe(std::vector<std::string>{"abc"}, 100), std::invalid_argument);
}

TEST(TrainBpe, DeterministicModelFiles) {
    FixtureBundle fixture = generate_fixture({});
    std::vector<Document> corpus(fixture.seed.begin(), fixture.seed.begin() + 40);
    TokenizerModel a = train_bpe(corpus, 600);
    TokenizerModel b = train_bpe(corpus, 600);
    EXPECT_EQ(model_to_json(a), model_to_json(b));
}

TEST(TrainBpe, MergePrefixMonotonicity) {
    FixtureBundle fixture = generate_fixture({});
    std::vector<Document> corpus(fixture.seed.begin(), fixture.seed.begin() + 40);
    TokenizerModel small = train_bpe(corpus, 400);
    TokenizerModel large = train_bpe(corpus, 520);
    ASSERT_LE(small.merges.size(), large.merges.size());
    for (size_t i = 0; i < small.merges.size(); ++i) EXPECT_EQ(small.merges[i], large.merges[i]);

    for (const auto& doc : corpus) {
        EXPECT_LE(encode(large, doc.text).size(), encode(small, doc.text).size());
    }
}

TEST(TrainBpe, NoMergeProducesASpecialTokenId) {
    FixtureBundle fixture = generate_fixture({});
    std::vector<Document> corpus(fixture.seed.begin(), fixture.seed.begin() + 30);
    TokenizerModel model = train_bpe(corpus, 500);
    TokenId first_merge_id = static_cast<TokenId>(256 + model.special_tokens.size());
    for (size_t k = 0; k < model.merges.size(); ++k) {
        TokenId output = first_merge_id + static_cast<TokenId>(k);
        for (const auto& [name, id] : model.special_tokens) {
            EXPECT_NE(output, id);
            EXPECT_NE(model.merges[k].first, id);
            EXPECT_NE(model.merges[k].second, id);
        }
    }
}

TEST(Encode, EmptyAndSpecials) {
    TokenizerModel model = train_bpe(std::vector<std::string>{"ab ab"}, 260);
    EXPECT_TRUE(encode(model, "").empty());

    auto ids = encode(model, "<foreign>");
    ASSERT_EQ(ids.size(), 1u);
    EXPECT_EQ(ids[0], model.foreign_id());

    ids = encode(model, "x<eod>y");
    ASSERT_EQ(ids.size(), 3u);
    EXPECT_EQ(ids[1], model.eod_id());
}

TEST(Encode, TokenCountBoundedByByteCount) {
    FixtureBundle fixture = generate_fixture({});
    TokenizerModel model =
        train_bpe(std::vector<Document>(fixture.seed.begin(), fixture.seed.begin() + 30), 500);
    Rng rng(3);
    for (int i = 0; i < 500; ++i) {
        std::string text = random_unicode_string(rng);
        EXPECT_LE(encode(model, text).size(), text.size());
    }
}

TEST(Decode, RoundTripAndErrors) {
    TokenizerModel model = train_bpe(std::vector<std::string>{"שלום עולם"}, 280);
    EXPECT_EQ(decode(model, encode(model, "שלום עולם")), "שלום עולם");
    EXPECT_EQ(decode(model, {model.eod_id()}), "<eod>");
    EXPECT_THROW(decode(model, {static_cast<TokenId>(model.vocab.size())}), std::out_of_range);
}

TEST(Decode, RoundTripPropertyOnRandomUnicode) {
    FixtureBundle fixture = generate_fixture({});
    TokenizerModel model =
        train_bpe(std::vector<Document>(fixture.seed.begin(), fixture.seed.begin() + 40), 600);
    Rng rng(17);
    for (int i = 0; i < 2000; ++i) {
        std::string text = random_unicode_string(rng);
        EXPECT_EQ(decode(model, encode(model, text)), text);
    }
    for (const auto& doc : fixture.modern_raw) {
        EXPECT_EQ(decode(model, encode(model, doc.text)), doc.text);
    }
}

TEST(Fertility, WholeWordVocabGivesOneTokenPerWord) {
    // Train until "ab" and " ab" are single tokens.
    TokenizerModel model = train_bpe(std::vector<std::string>{"ab ab ab"}, 256 + 3 + 2);
    std::vector<Document> corpus = {{"1", "t", "ab ab ab"}};
    FertilityStats stats = fertility(model, corpus);
    EXPECT_EQ(stats.word_count, 3u);
    EXPECT_EQ(stats.token_count, 3u);
    EXPECT_DOUBLE_EQ(stats.tokens_per_word, 1.0);
    // chars exclude whitespace: 6 codepoints.
    EXPECT_EQ(stats.char_count, 6u);
}

TEST(Fertility, ByteFallbackCountsBytesIncludingMarker) {
    TokenizerModel model = train_bpe(std::vector<std::string>{"zq"}, 256 + 3);
    std::vector<Document> corpus = {{"1", "t", "abcd efgh"}};
    FertilityStats stats = fertility(model, corpus);
    // "abcd" -> 4 byte tokens, " efgh" -> 5 (the marker space is a token).
    EXPECT_EQ(stats.token_count, 9u);
    EXPECT_EQ(stats.word_count, 2u);
    EXPECT_DOUBLE_EQ(stats.tokens_per_word, 4.5);
    EXPECT_DOUBLE_EQ(stats.tokens_per_word * static_cast<double>(stats.word_count),
                     static_cast<double>(stats.token_count));
}

TEST(Fertility, Errors) {
    TokenizerModel model = train_bpe(std::vector<std::string>{"ab"}, 260);
    EXPECT_THROW(fertility(model, {}), std::invalid_argument);
    std::vector<Document> no_words = {{"1", "t", "   "}};
    EXPECT_THROW(fertility(model, no_words), std::invalid_argument);
}

TEST(ModelFile, SaveLoadByteIdentical) {
    FixtureBundle fixture = generate_fixture({});
    TokenizerModel model =
        train_bpe(std::vector<Document>(fixture.seed.begin(), fixture.seed.begin() + 30), 500);
    auto dir = std::filesystem::temp_directory_path() / "lmforge_bpe_test";
    std::filesystem::create_directories(dir);
    std::string p1 = (dir / "m1.json").string();
    std::string p2 = (dir / "m2.json").string();
    save_model(model, p1);
    TokenizerModel loaded = load_model(p1);
    save_model(loaded, p2);

    std::ifstream f1(p1), f2(p2);
    std::string s1((std::istreambuf_iterator<char>(f1)), std::istreambuf_iterator<char>());
    std::string s2((std::istreambuf_iterator<char>(f2)), std::istreambuf_iterator<char>());
    EXPECT_EQ(s1, s2);
    EXPECT_EQ(loaded.merges, model.merges);
    EXPECT_EQ(loaded.vocab, model.vocab);
}

TEST(ModelFile, HandWrittenTwoMergeModel) {
    // Bytes 0-255, specials at 256-258, then merges ("h","i")->259 and
    // ("hi","!")->260, written per the documented format.
    std::string vocab_entries;
    for (int b = 0; b < 256; ++b) {
        char buf[8];
        snprintf(buf, sizeof buf, "\"%02x\"", b);
        vocab_entries += buf;
        vocab_entries += ',';
    }
    auto hex = [](const std::string& s) {
        static const char* digits = "0123456789abcdef";
        std::string out;
        for (unsigned char c : s) {
            out += digits[c >> 4];
            out += digits[c & 0xF];
        }
        return out;
    };
    vocab_entries += '"' + hex("<foreign>") + "\",";
    vocab_entries += '"' + hex("<eod>") + "\",";
    vocab_entries += '"' + hex("<pad>") + "\",";
    vocab_entries += '"' + hex("hi") + "\",";
    vocab_entries += '"' + hex("hi!") + "\"";
    std::string json = "{\"version\":\"bpe-v1\",\"vocab\":[" + vocab_entries +
                       "],\"merges\":[[104,105],[259,33]],\"special\":{\"<foreign>\":256,"
                       "\"<eod>\":257,\"<pad>\":258}}";
    TokenizerModel model = model_from_json(json, "hand-written");
    auto ids = encode(model, "hi!");
    ASSERT_EQ(ids.size(), 1u);
    EXPECT_EQ(ids[0], 260u);
    EXPECT_EQ(decode(model, ids), "hi!");
}

TEST(ModelFile, TruncatedFileIsAnExplicitError) {
    auto dir = std::filesystem::temp_directory_path() / "lmforge_bpe_test";
    std::filesystem::create_directories(dir);
    std::string path = (dir / "trunc.json").string();
    {
        std::ofstream out(path);
        out << "{\"version\":\"bpe-v1\",\"vocab\":[\"00\",";
    }
    try {
        load_model(path);
        FAIL() << "expected a parse error";
    } catch (const std::runtime_error& e) {
        EXPECT_NE(std::string(e.what()).find("parse error"), std::string::npos);
    }
}

TEST(ModelFile, InconsistentMergeIsRejected) {
    std::string json = "{\"version\":\"bpe-v1\",\"vocab\":[],\"merges\":[],\"special\":{}}";
    EXPECT_THROW(model_from_json(json), std::runtime_error);
}
