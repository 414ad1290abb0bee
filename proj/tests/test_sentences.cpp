#include <gtest/gtest.h>

#include "lmforge/rng.hpp"
#include "lmforge/sentences.hpp"
#include "lmforge/utf8.hpp"

using namespace lmforge;

TEST(SplitSentences, RuleApplication) {
    auto s = split_sentences("A. B!");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0], "A.");
    EXPECT_EQ(s[1], "B!");
}

TEST(SplitSentences, NoTerminator) {
    auto s = split_sentences("no terminator");
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0], "no terminator");
}

TEST(SplitSentences, NewlineSplits) {
    auto s = split_sentences("line one\nline two");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0], "line one");
    EXPECT_EQ(s[1], "line two");
}

TEST(SplitSentences, TerminatorInsideTokenDoesNotSplit) {
    auto s = split_sentences("A.B stays");
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0], "A.B stays");
}

TEST(SplitSentences, TerminalRunStaysWithSentence) {
    auto s = split_sentences("מה?! עוד אחד...");
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s[0], "מה?!");
    EXPECT_EQ(s[1], "עוד אחד...");
}

TEST(SegmentSentences, ReconstructionOnRandomDocs) {
    Rng rng(123);
    const char32_t pool[] = {U'a', U'b', U'א', U'ב', U' ', U' ', U'.',
                             U'!', U'?', U'\n', U'\t', U',', U'1'};
    for (int trial = 0; trial < 1000; ++trial) {
        std::string text;
        size_t n = rng.uniform_u64(200);
        for (size_t i = 0; i < n; ++i)
            append_utf8(text, pool[rng.uniform_u64(std::size(pool))]);
        SentenceSegments segs = segment_sentences(text);
        EXPECT_EQ(segs.reconstruct(), text);
        for (const auto& span : segs.sentences) EXPECT_FALSE(span.text.empty());
    }
}

TEST(SegmentSentences, LeadingAndTrailingWhitespaceKept) {
    SentenceSegments segs = segment_sentences("  one. two  ");
    EXPECT_EQ(segs.leading, "  ");
    ASSERT_EQ(segs.sentences.size(), 2u);
    EXPECT_EQ(segs.sentences[0].text, "one.");
    EXPECT_EQ(segs.sentences[0].separator, " ");
    EXPECT_EQ(segs.sentences[1].text, "two");
    EXPECT_EQ(segs.sentences[1].separator, "  ");
    EXPECT_EQ(segs.reconstruct(), "  one. two  ");
}
