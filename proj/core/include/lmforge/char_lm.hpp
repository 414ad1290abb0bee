#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace lmforge {

/// Additive-smoothing codepoint n-gram model with begin/end sentinels,
/// trained per sentence. Doubles as the gibberish reference: it records the
/// set of codepoint bigrams seen in the training text.
///
/// The event space of each conditional distribution is the training alphabet
/// plus the end sentinel, so V = |alphabet| + 1. Codepoints outside the
/// alphabet score like an unseen alphabet symbol.
class CharLm {
public:
    /// order >= 2; smoothing > 0. Throws std::invalid_argument otherwise,
    /// or if the corpus contributes no text.
    static CharLm train(const std::vector<std::string>& texts, int order, double smoothing);

    int order() const { return order_; }
    double smoothing() const { return smoothing_; }
    size_t alphabet_size() const { return alphabet_.size(); }
    /// V: alphabet plus end sentinel.
    size_t event_space_size() const { return alphabet_.size() + 1; }

    /// P(next | context). `context` may be any length; only the last
    /// order-1 codepoints are used, padded with the begin sentinel.
    double prob(const std::vector<char32_t>& context, char32_t next) const;

    /// exp(-(1/N) * sum log P(c_i | c_{i-order+1..i-1})) over the sentence
    /// codepoints (the end sentinel is not scored). Throws on empty input.
    double sentence_perplexity(std::string_view sentence) const;

    /// Fraction of adjacent codepoint pairs in `text` never seen in training.
    /// Empty or single-codepoint text scores 0.
    double gibberish_score(std::string_view text) const;

    bool bigram_seen(char32_t a, char32_t b) const;

    /// Sentinel codepoint values (outside Unicode range).
    static constexpr char32_t kBos = 0x110000;
    static constexpr char32_t kEos = 0x110001;

    /// Contexts observed during training, for invariant checks.
    std::vector<std::vector<char32_t>> observed_contexts(size_t limit = 0) const;

private:
    CharLm() = default;

    struct ContextCounts {
        uint64_t total = 0;
        std::unordered_map<char32_t, uint64_t> next;
    };

    static std::u32string key_of(const char32_t* ctx, size_t len);

    int order_ = 0;
    double smoothing_ = 1.0;
    std::unordered_set<char32_t> alphabet_;
    std::unordered_map<std::u32string, ContextCounts> counts_;
    std::unordered_set<uint64_t> bigrams_;
};

/// Nearest-rank percentile (q in [0,100]) of a non-empty sample.
double percentile(std::vector<double> values, double q);

} // namespace lmforge
