#include "lmforge/char_lm.hpp"

#include "lmforge/sentences.hpp"
#include "lmforge/utf8.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lmforge {

namespace {

inline uint64_t bigram_key(char32_t a, char32_t b) {
    return (static_cast<uint64_t>(a) << 32) | static_cast<uint64_t>(b);
}

} // namespace

std::u32string CharLm::key_of(const char32_t* ctx, size_t len) {
    return std::u32string(ctx, len);
}

CharLm CharLm::train(const std::vector<std::string>& texts, int order, double smoothing) {
    if (order < 2) throw std::invalid_argument("char lm order must be >= 2");
    if (smoothing <= 0.0) throw std::invalid_argument("char lm smoothing must be > 0");

    CharLm lm;
    lm.order_ = order;
    lm.smoothing_ = smoothing;

    bool saw_text = false;
    for (const auto& text : texts) {
        // Bigram table over the raw text (no sentinels).
        std::vector<char32_t> raw = decode_utf8(text);
        for (size_t i = 0; i + 1 < raw.size(); ++i)
            lm.bigrams_.insert(bigram_key(raw[i], raw[i + 1]));

        for (const auto& sentence : split_sentences(text)) {
            std::vector<char32_t> cps = decode_utf8(sentence);
            if (cps.empty()) continue;
            saw_text = true;
            for (char32_t c : cps) lm.alphabet_.insert(c);

            // Padded sequence: order-1 begin sentinels, text, one end sentinel.
            std::vector<char32_t> seq(order - 1, kBos);
            seq.insert(seq.end(), cps.begin(), cps.end());
            seq.push_back(kEos);
            for (size_t i = static_cast<size_t>(order - 1); i < seq.size(); ++i) {
                std::u32string key = key_of(seq.data() + i - (order - 1), order - 1);
                ContextCounts& cc = lm.counts_[key];
                cc.total++;
                cc.next[seq[i]]++;
            }
        }
    }
    if (!saw_text) throw std::invalid_argument("char lm training corpus is empty");
    return lm;
}

double CharLm::prob(const std::vector<char32_t>& context, char32_t next) const {
    size_t ctx_len = static_cast<size_t>(order_ - 1);
    std::vector<char32_t> ctx(ctx_len, kBos);
    size_t take = std::min(context.size(), ctx_len);
    std::copy(context.end() - take, context.end(), ctx.end() - take);

    double v = static_cast<double>(event_space_size());
    auto it = counts_.find(key_of(ctx.data(), ctx_len));
    if (it == counts_.end()) return 1.0 / v;
    const ContextCounts& cc = it->second;
    auto nit = cc.next.find(next);
    double count = nit == cc.next.end() ? 0.0 : static_cast<double>(nit->second);
    return (count + smoothing_) /
           (static_cast<double>(cc.total) + smoothing_ * v);
}

double CharLm::sentence_perplexity(std::string_view sentence) const {
    std::vector<char32_t> cps = decode_utf8(sentence);
    if (cps.empty()) throw std::invalid_argument("sentence_perplexity: empty sentence");

    size_t ctx_len = static_cast<size_t>(order_ - 1);
    std::vector<char32_t> seq(ctx_len, kBos);
    seq.insert(seq.end(), cps.begin(), cps.end());

    double log_sum = 0.0;
    double v = static_cast<double>(event_space_size());
    for (size_t i = ctx_len; i < seq.size(); ++i) {
        auto it = counts_.find(key_of(seq.data() + i - ctx_len, ctx_len));
        double p;
        if (it == counts_.end()) {
            p = 1.0 / v;
        } else {
            const ContextCounts& cc = it->second;
            auto nit = cc.next.find(seq[i]);
            double count = nit == cc.next.end() ? 0.0 : static_cast<double>(nit->second);
            p = (count + smoothing_) / (static_cast<double>(cc.total) + smoothing_ * v);
        }
        log_sum += std::log(p);
    }
    return std::exp(-log_sum / static_cast<double>(cps.size()));
}

double CharLm::gibberish_score(std::string_view text) const {
    std::vector<char32_t> cps = decode_utf8(text);
    if (cps.size() < 2) return 0.0;
    uint64_t unseen = 0;
    for (size_t i = 0; i + 1 < cps.size(); ++i)
        if (!bigrams_.contains(bigram_key(cps[i], cps[i + 1]))) ++unseen;
    return static_cast<double>(unseen) / static_cast<double>(cps.size() - 1);
}

bool CharLm::bigram_seen(char32_t a, char32_t b) const {
    return bigrams_.contains(bigram_key(a, b));
}

std::vector<std::vector<char32_t>> CharLm::observed_contexts(size_t limit) const {
    std::vector<std::vector<char32_t>> out;
    for (const auto& [key, _] : counts_) {
        out.emplace_back(key.begin(), key.end());
        if (limit != 0 && out.size() >= limit) break;
    }
    return out;
}

double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile of empty sample");
    std::sort(values.begin(), values.end());
    double rank = q / 100.0 * static_cast<double>(values.size());
    size_t idx = static_cast<size_t>(std::ceil(rank));
    if (idx == 0) idx = 1;
    if (idx > values.size()) idx = values.size();
    return values[idx - 1];
}

} // namespace lmforge
