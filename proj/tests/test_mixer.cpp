#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "lmforge/mixer.hpp"

using namespace lmforge;

namespace {

std::vector<Document> make_corpus(const std::string& prefix, size_t n) {
    std::vector<Document> docs;
    for (size_t i = 0; i < n; ++i)
        docs.push_back({prefix + std::to_string(i), prefix, "text " + std::to_string(i)});
    return docs;
}

MixtureSpec two_way_spec(uint64_t seed) {
    MixtureSpec spec;
    spec.components = {{"a.jsonl", 0.5}, {"b.jsonl", 0.5}};
    spec.seed = seed;
    return spec;
}

} // namespace

TEST(SequencePacker, HandApplied) {
    SequencePacker packer(3, 0);
    packer.add_document({1, 2, 3}, 0);
    packer.add_document({4, 5}, 0);
    auto seqs = packer.take_sequences();
    ASSERT_EQ(seqs.size(), 2u);
    EXPECT_EQ(seqs[0], (std::vector<TokenId>{1, 2, 3}));
    EXPECT_EQ(seqs[1], (std::vector<TokenId>{0, 4, 5}));
    EXPECT_EQ(packer.pending(), 1u); // the trailing eod is dropped
}

TEST(SequencePacker, DocOfSeqLenMinusOneEndsWithEod) {
    SequencePacker packer(4, 9);
    packer.add_document({7, 7, 7}, 0);
    auto seqs = packer.take_sequences();
    ASSERT_EQ(seqs.size(), 1u);
    EXPECT_EQ(seqs[0], (std::vector<TokenId>{7, 7, 7, 9}));
    EXPECT_EQ(packer.pending(), 0u);
}

TEST(SequencePacker, EmittedTokensMultipleOfSeqLenAndConserved) {
    Rng rng(8);
    SequencePacker packer(16, 0);
    std::vector<TokenId> expected_stream;
    for (int d = 0; d < 50; ++d) {
        std::vector<TokenId> doc(1 + rng.uniform_u64(40));
        for (auto& t : doc) t = 1 + static_cast<TokenId>(rng.uniform_u64(1000));
        packer.add_document(doc, 0);
        expected_stream.insert(expected_stream.end(), doc.begin(), doc.end());
        expected_stream.push_back(0);
    }
    auto seqs = packer.take_sequences();
    std::vector<TokenId> flat;
    for (const auto& s : seqs) {
        EXPECT_EQ(s.size(), 16u);
        flat.insert(flat.end(), s.begin(), s.end());
    }
    EXPECT_EQ(flat.size() % 16, 0u);
    ASSERT_LE(flat.size(), expected_stream.size());
    EXPECT_TRUE(std::equal(flat.begin(), flat.end(), expected_stream.begin()));
    EXPECT_LT(expected_stream.size() - flat.size(), 16u); // only the tail dropped
}

TEST(MixtureSpec, Validation) {
    MixtureSpec spec;
    EXPECT_THROW(spec.validate(), std::invalid_argument);
    spec.components = {{"a", 0.3}, {"b", 0.3}};
    EXPECT_THROW(spec.validate(), std::invalid_argument);
    spec.components = {{"a", 0.5}, {"b", 0.5}};
    EXPECT_NO_THROW(spec.validate());
    spec.components[0].weight = -0.5;
    spec.components[1].weight = 1.5;
    EXPECT_THROW(spec.validate(), std::invalid_argument);
}

TEST(MixtureSampler, FiftyFiftyFractionAndFullCoverage) {
    auto a = make_corpus("a", 500);
    auto b = make_corpus("b", 10);
    MixtureSampler sampler(two_way_spec(21), {a, b});

    std::set<std::string> b_seen;
    size_t b_draws = 0;
    const size_t n = 10000;
    for (size_t i = 0; i < n; ++i) {
        auto draw = sampler.next();
        if (draw.component == 1) {
            ++b_draws;
            b_seen.insert(draw.doc->id);
        }
    }
    EXPECT_EQ(b_seen.size(), 10u); // oversampling covers every document
    double fraction = static_cast<double>(b_draws) / n;
    EXPECT_NEAR(fraction, 0.5, 0.02);
}

TEST(MixtureSampler, SingleComponentIsPermutationCycled) {
    auto a = make_corpus("a", 20);
    MixtureSpec spec;
    spec.components = {{"a.jsonl", 1.0}};
    spec.seed = 5;
    MixtureSampler sampler(spec, {a});

    for (int cycle = 0; cycle < 3; ++cycle) {
        std::set<std::string> seen;
        for (int i = 0; i < 20; ++i) seen.insert(sampler.next().doc->id);
        EXPECT_EQ(seen.size(), 20u); // each cycle is a permutation of the corpus
    }
}

TEST(MixtureSampler, DeterministicStreams) {
    auto a = make_corpus("a", 30);
    auto b = make_corpus("b", 7);
    MixtureSampler s1(two_way_spec(13), {a, b});
    MixtureSampler s2(two_way_spec(13), {a, b});
    for (int i = 0; i < 500; ++i) {
        auto d1 = s1.next();
        auto d2 = s2.next();
        EXPECT_EQ(d1.component, d2.component);
        EXPECT_EQ(d1.doc->id, d2.doc->id);
    }
}

TEST(MixtureSampler, CoverageAtTwoOverWeightDraws) {
    // n = 2m/w with m=10, w=0.5: cyclic order guarantees coverage once the
    // component receives m draws; the 2x margin absorbs the sampling noise.
    auto a = make_corpus("a", 100);
    auto b = make_corpus("b", 10);
    MixtureSampler sampler(two_way_spec(3), {a, b});
    std::set<std::string> b_seen;
    for (int i = 0; i < 40; ++i) {
        auto draw = sampler.next();
        if (draw.component == 1) b_seen.insert(draw.doc->id);
    }
    EXPECT_EQ(b_seen.size(), 10u);
}

TEST(MixtureSampler, EmptyComponentThrows) {
    auto a = make_corpus("a", 5);
    std::vector<Document> empty;
    EXPECT_THROW(MixtureSampler(two_way_spec(1), {a, empty}), std::invalid_argument);
}

TEST(EpochProgress, PaperScaleConsistency) {
    // 18.5e9 tokens over a 7.5e9-token corpus is about 2.47 epochs.
    EXPECT_NEAR(epoch_progress(18'500'000'000ULL, 7'500'000'000ULL), 2.4667, 1e-3);
    EXPECT_DOUBLE_EQ(epoch_progress(0, 100), 0.0);
    EXPECT_DOUBLE_EQ(epoch_progress(100, 100), 1.0);
    EXPECT_THROW(epoch_progress(1, 0), std::invalid_argument);
}

TEST(PackedFile, RoundTrip) {
    PackedHeader header;
    header.seq_len = 4;
    header.eod_id = 0;
    header.component_paths = {"a.jsonl", "b.jsonl"};
    header.component_token_fractions = {0.5, 0.5};
    std::vector<std::vector<TokenId>> seqs = {{1, 2, 3, 4}, {5, 6, 7, 0xFFFFFFFFu}};

    auto dir = std::filesystem::temp_directory_path() / "lmforge_pack_test";
    std::filesystem::create_directories(dir);
    std::string path = (dir / "data.bin").string();
    write_packed(path, header, seqs);

    PackedDataset ds = read_packed(path);
    EXPECT_EQ(ds.header.seq_len, 4u);
    EXPECT_EQ(ds.header.num_sequences, 2u);
    ASSERT_EQ(ds.tokens.size(), 8u);
    EXPECT_EQ(ds.tokens[7], 0xFFFFFFFFu);
    EXPECT_EQ(ds.header.component_paths.size(), 2u);
    const uint32_t* row1 = ds.sequence(1);
    EXPECT_EQ(row1[0], 5u);
}

TEST(PackedFile, TruncationDetected) {
    auto dir = std::filesystem::temp_directory_path() / "lmforge_pack_test";
    std::filesystem::create_directories(dir);
    std::string path = (dir / "trunc.bin").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << "{\"version\":\"pack-v1\",\"seq_len\":4,\"num_sequences\":2,\"eod_id\":0}\n";
        out << "\x01\x00\x00\x00"; // one token of thirty-two expected bytes
    }
    EXPECT_THROW(read_packed(path), std::runtime_error);
}
