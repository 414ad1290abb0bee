#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace lmforge {

/// Sentence segmentation that never loses bytes:
///   text == leading + sum(sentences[i].text + sentences[i].separator)
/// A sentence ends after a run of '.', '!' or '?' followed by whitespace or
/// end of text, or at a newline. Separators are the whitespace runs between
/// sentences; each sentence owns its trailing separator.
struct SentenceSpan {
    std::string text;
    std::string separator;
};

struct SentenceSegments {
    std::string leading; // whitespace before the first sentence
    std::vector<SentenceSpan> sentences;

    std::string reconstruct() const;
};

SentenceSegments segment_sentences(std::string_view text);

/// Just the sentence texts, separators dropped.
std::vector<std::string> split_sentences(std::string_view text);

} // namespace lmforge
