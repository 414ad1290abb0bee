#include "lmforge/fixture.hpp"

#include "lmforge/rng.hpp"
#include "lmforge/utf8.hpp"

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace lmforge {

namespace {

/// Zipf-distributed synthetic vocabulary over a letter range.
class WordPool {
public:
    WordPool(Rng& rng, size_t size, char32_t first_letter, char32_t last_letter,
             size_t min_len = 2, size_t max_len = 7) {
        size_t letters = static_cast<size_t>(last_letter - first_letter) + 1;
        words_.reserve(size);
        for (size_t i = 0; i < size; ++i) {
            size_t len = min_len + rng.uniform_u64(max_len - min_len + 1);
            std::string w;
            for (size_t k = 0; k < len; ++k)
                append_utf8(w, first_letter + static_cast<char32_t>(rng.uniform_u64(letters)));
            words_.push_back(std::move(w));
        }
        // Zipf weights 1/(rank+2).
        cumulative_.reserve(size);
        double acc = 0.0;
        for (size_t r = 0; r < size; ++r) {
            acc += 1.0 / static_cast<double>(r + 2);
            cumulative_.push_back(acc);
        }
        total_ = acc;
    }

    const std::string& draw(Rng& rng) const {
        double u = rng.uniform() * total_;
        size_t lo = 0, hi = cumulative_.size() - 1;
        while (lo < hi) {
            size_t mid = (lo + hi) / 2;
            if (cumulative_[mid] < u) lo = mid + 1;
            else hi = mid;
        }
        return words_[lo];
    }

private:
    std::vector<std::string> words_;
    std::vector<double> cumulative_;
    double total_ = 0.0;
};

struct TextGen {
    const WordPool& hebrew;
    const WordPool& latin;
    double latin_fraction;

    std::string sentence(Rng& rng, size_t min_words = 4, size_t max_words = 14) const {
        size_t n = min_words + rng.uniform_u64(max_words - min_words + 1);
        std::string out;
        for (size_t i = 0; i < n; ++i) {
            if (i > 0) out += ' ';
            out += rng.uniform() < latin_fraction ? latin.draw(rng) : hebrew.draw(rng);
        }
        double u = rng.uniform();
        out += u < 0.8 ? '.' : (u < 0.9 ? '!' : '?');
        return out;
    }

    std::string paragraph(Rng& rng, size_t min_sents = 1, size_t max_sents = 6) const {
        size_t n = min_sents + rng.uniform_u64(max_sents - min_sents + 1);
        std::string out;
        for (size_t i = 0; i < n; ++i) {
            if (i > 0) out += rng.uniform() < 0.15 ? "\n" : " ";
            out += sentence(rng);
        }
        return out;
    }
};

std::string cyrillic_run(Rng& rng, size_t words) {
    std::string out;
    for (size_t i = 0; i < words; ++i) {
        if (i > 0) out += ' ';
        size_t len = 3 + rng.uniform_u64(6);
        for (size_t k = 0; k < len; ++k)
            append_utf8(out, 0x0430 + static_cast<char32_t>(rng.uniform_u64(32)));
    }
    return out;
}

/// Hebrew presentation forms; valid Hebrew-class codepoints that the word
/// pools never emit, so their bigrams read as gibberish.
std::string presentation_junk(Rng& rng, size_t length) {
    std::string out;
    for (size_t k = 0; k < length; ++k)
        append_utf8(out, 0xFB1D + static_cast<char32_t>(rng.uniform_u64(0xFB36 - 0xFB1D)));
    return out;
}

} // namespace

FixtureBundle generate_fixture(const FixtureOptions& options) {
    Rng root(options.seed);
    Rng vocab_rng = root.derive(1);
    WordPool hebrew(vocab_rng, 1400, 0x05D0, 0x05EA);
    WordPool latin(vocab_rng, 420, 'a', 'z');
    WordPool rabbinic_pool(vocab_rng, 900, 0x05D0, 0x05EA);

    TextGen modern{hebrew, latin, 0.12};
    TextGen rabbinic{rabbinic_pool, latin, 0.02};

    FixtureBundle bundle;

    // Modern corpus: clean docs, foreign-salted docs, engineered offenders,
    // deterministically interleaved by id.
    {
        Rng rng = root.derive(2);
        size_t id = 0;
        for (size_t i = 0; i < options.modern_docs; ++i)
            bundle.modern_raw.push_back(
                {"mod-" + std::to_string(id++), "c4", modern.paragraph(rng)});
        for (size_t i = 0; i < options.foreign_docs; ++i) {
            std::string text = modern.sentence(rng);
            text += ' ';
            text += cyrillic_run(rng, 2 + rng.uniform_u64(4));
            text += ' ';
            text += modern.sentence(rng);
            bundle.modern_raw.push_back({"mod-" + std::to_string(id++), "c4", text});
        }
        for (size_t i = 0; i < options.dirty_docs; ++i) {
            std::string text;
            switch (rng.uniform_u64(3)) {
                case 0: { // digit-heavy
                    for (size_t k = 0; k < 60; ++k)
                        text += static_cast<char>('0' + rng.uniform_u64(10));
                    text += ' ';
                    text += hebrew.draw(rng);
                    break;
                }
                case 1: { // one codepoint repeated: run filter
                    std::string w = hebrew.draw(rng);
                    text = w + ' ';
                    for (size_t k = 0; k < 50; ++k) text += "\xd7\x90"; // aleph run
                    break;
                }
                default: { // unseen-bigram junk: gibberish filter
                    text = presentation_junk(rng, 40 + rng.uniform_u64(30));
                    break;
                }
            }
            bundle.modern_raw.push_back({"mod-" + std::to_string(id++), "other", text});
        }
        // Deterministic shuffle so offenders are spread through the file.
        Rng shuffle_rng = root.derive(3);
        for (size_t i = bundle.modern_raw.size(); i > 1; --i)
            std::swap(bundle.modern_raw[i - 1], bundle.modern_raw[shuffle_rng.uniform_u64(i)]);
    }

    {
        Rng rng = root.derive(4);
        for (size_t i = 0; i < options.rabbinic_docs; ++i)
            bundle.rabbinic.push_back(
                {"rab-" + std::to_string(i), "rabbinic", rabbinic.paragraph(rng)});
    }

    {
        Rng rng = root.derive(5);
        for (size_t i = 0; i < options.seed_docs; ++i)
            bundle.seed.push_back({"seed-" + std::to_string(i), "seed", modern.paragraph(rng)});
    }

    {
        Rng rng = root.derive(6);
        for (size_t i = 0; i < options.qa_records; ++i) {
            // Build the context word by word, tracking byte offsets.
            size_t sentences = 2 + rng.uniform_u64(3);
            std::string context;
            std::vector<std::pair<size_t, size_t>> word_spans; // [begin, end) bytes
            for (size_t s = 0; s < sentences; ++s) {
                if (s > 0) context += ' ';
                size_t words = 5 + rng.uniform_u64(8);
                for (size_t w = 0; w < words; ++w) {
                    if (w > 0) context += ' ';
                    const std::string& word =
                        rng.uniform() < 0.1 ? latin.draw(rng) : hebrew.draw(rng);
                    word_spans.emplace_back(context.size(), context.size() + word.size());
                    context += word;
                }
                context += '.';
            }
            size_t pick = rng.uniform_u64(word_spans.size());
            size_t span_words = 1 + rng.uniform_u64(2);
            size_t last = std::min(pick + span_words - 1, word_spans.size() - 1);
            QARecord rec;
            rec.context = context;
            rec.answer_start = word_spans[pick].first;
            rec.answer_span = context.substr(word_spans[pick].first,
                                             word_spans[last].second - word_spans[pick].first);
            rec.question = modern.sentence(rng, 3, 8);
            rec.question.back() = '?';
            bundle.qa.push_back(std::move(rec));
        }
    }

    {
        Rng rng = root.derive(7);
        for (size_t i = 0; i < options.translated_records; ++i) {
            std::string question = modern.sentence(rng, 3, 9);
            question.back() = '?';
            size_t sents = 1 + rng.uniform_u64(5);
            std::string response;
            for (size_t s = 0; s < sents; ++s) {
                if (s > 0) response += ' ';
                response += modern.sentence(rng, 3, 9);
                if (response.back() != '.') response.back() = '.';
            }
            bundle.translated.emplace_back(std::move(question), std::move(response));
        }
    }

    return bundle;
}

void write_fixture(const FixtureBundle& bundle, const std::string& dir) {
    std::filesystem::create_directories(dir);
    auto path = [&](const char* name) { return (std::filesystem::path(dir) / name).string(); };

    write_documents(path("modern_raw.jsonl"), bundle.modern_raw);
    write_documents(path("rabbinic.jsonl"), bundle.rabbinic);
    write_documents(path("seed.jsonl"), bundle.seed);

    {
        std::ofstream out(path("qa.jsonl"), std::ios::binary | std::ios::trunc);
        for (const auto& rec : bundle.qa) {
            nlohmann::ordered_json j;
            j["context"] = rec.context;
            j["question"] = rec.question;
            j["answer"] = rec.answer_span;
            j["answer_start"] = rec.answer_start;
            out << j.dump() << '\n';
        }
    }
    {
        std::ofstream out(path("translated.jsonl"), std::ios::binary | std::ios::trunc);
        for (const auto& [q, r] : bundle.translated) {
            nlohmann::ordered_json j;
            j["question"] = q;
            j["response"] = r;
            out << j.dump() << '\n';
        }
    }
}

} // namespace lmforge
