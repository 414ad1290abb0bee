#include "lmforge/cleaner.hpp"

#include "lmforge/sentences.hpp"
#include "lmforge/utf8.hpp"

#include <fstream>
#include <future>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lmforge {

void CleaningConfig::validate() const {
    auto frac = [](double f, const char* name) {
        if (f < 0.0 || f > 1.0)
            throw std::invalid_argument(std::string(name) + " must be in [0,1]");
    };
    frac(max_non_letter_fraction, "max_non_letter_fraction");
    frac(max_digit_fraction, "max_digit_fraction");
    frac(max_run_fraction, "max_run_fraction");
    frac(gibberish_threshold, "gibberish_threshold");
    if (perplexity_threshold != 0.0 && perplexity_threshold <= 1.0)
        throw std::invalid_argument("perplexity_threshold must be > 1 (or 0 to calibrate)");
    if (perplexity_percentile <= 0.0 || perplexity_percentile > 100.0)
        throw std::invalid_argument("perplexity_percentile must be in (0,100]");
    if (ngram_order < 2) throw std::invalid_argument("ngram_order must be >= 2");
    if (smoothing <= 0.0) throw std::invalid_argument("smoothing must be > 0");
}

CleaningConfig CleaningConfig::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cleaning config: " + path);
    nlohmann::json j;
    in >> j;
    CleaningConfig c;
    c.max_non_letter_fraction = j.value("max_non_letter_fraction", c.max_non_letter_fraction);
    c.max_digit_fraction = j.value("max_digit_fraction", c.max_digit_fraction);
    c.max_run_fraction = j.value("max_run_fraction", c.max_run_fraction);
    c.gibberish_threshold = j.value("gibberish_threshold", c.gibberish_threshold);
    c.perplexity_threshold = j.value("perplexity_threshold", c.perplexity_threshold);
    c.perplexity_percentile = j.value("perplexity_percentile", c.perplexity_percentile);
    c.ngram_order = j.value("ngram_order", c.ngram_order);
    c.smoothing = j.value("smoothing", c.smoothing);
    c.validate();
    return c;
}

std::string CleaningConfig::to_json() const {
    nlohmann::ordered_json j;
    j["max_non_letter_fraction"] = max_non_letter_fraction;
    j["max_digit_fraction"] = max_digit_fraction;
    j["max_run_fraction"] = max_run_fraction;
    j["gibberish_threshold"] = gibberish_threshold;
    j["perplexity_threshold"] = perplexity_threshold;
    j["perplexity_percentile"] = perplexity_percentile;
    j["ngram_order"] = ngram_order;
    j["smoothing"] = smoothing;
    return j.dump(2);
}

std::string CleaningReport::to_json() const {
    nlohmann::ordered_json j;
    j["total_docs"] = total_docs;
    j["kept_docs"] = kept_docs;
    j["dropped_by_histogram"] = dropped_by_histogram;
    j["dropped_by_gibberish"] = dropped_by_gibberish;
    j["sentences_dropped_by_perplexity"] = sentences_dropped_by_perplexity;
    j["foreign_runs_reduced"] = foreign_runs_reduced;
    j["skipped_malformed"] = skipped_malformed;
    j["removal_fraction"] = removal_fraction;
    j["removal_fraction_chars"] = removal_fraction_chars;
    return j.dump(2);
}

CleaningReport CleaningReport::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open cleaning report: " + path);
    nlohmann::json j;
    in >> j;
    CleaningReport r;
    r.total_docs = j.at("total_docs").get<uint64_t>();
    r.kept_docs = j.at("kept_docs").get<uint64_t>();
    r.dropped_by_histogram = j.at("dropped_by_histogram").get<uint64_t>();
    r.dropped_by_gibberish = j.at("dropped_by_gibberish").get<uint64_t>();
    r.sentences_dropped_by_perplexity = j.at("sentences_dropped_by_perplexity").get<uint64_t>();
    r.foreign_runs_reduced = j.at("foreign_runs_reduced").get<uint64_t>();
    r.skipped_malformed = j.value("skipped_malformed", uint64_t{0});
    r.removal_fraction = j.at("removal_fraction").get<double>();
    r.removal_fraction_chars = j.value("removal_fraction_chars", 0.0);
    return r;
}

const char* to_string(DropReason reason) {
    switch (reason) {
        case DropReason::None: return "none";
        case DropReason::NonLetter: return "non_letter";
        case DropReason::Digit: return "digit";
        case DropReason::Run: return "run";
    }
    return "?";
}

DropReason histogram_filter(const CharHistogram& hist, const CleaningConfig& config) {
    if (hist.non_letter_fraction() > config.max_non_letter_fraction) return DropReason::NonLetter;
    if (hist.fraction(ScriptClass::Digit) > config.max_digit_fraction) return DropReason::Digit;
    if (hist.longest_run_fraction() > config.max_run_fraction) return DropReason::Run;
    return DropReason::None;
}

CleaningModel CleaningModel::build(const std::vector<Document>& seed_docs,
                                   const CleaningConfig& config) {
    config.validate();
    if (seed_docs.empty()) throw std::invalid_argument("seed corpus is empty");

    // The scorer sees post-reduction text, so train it on post-reduction text.
    std::vector<std::string> train_sents;
    std::vector<std::string> held_sents;
    size_t idx = 0;
    for (const auto& doc : seed_docs) {
        std::string reduced = reduce_foreign(doc.text).text;
        for (auto& s : split_sentences(reduced)) {
            if (idx % 10 == 9) held_sents.push_back(s);
            else train_sents.push_back(s);
            ++idx;
        }
    }
    if (train_sents.empty()) throw std::invalid_argument("seed corpus has no sentences");

    CleaningModel model{CharLm::train(train_sents, config.ngram_order, config.smoothing), 0.0};
    if (config.perplexity_threshold > 0.0) {
        model.perplexity_threshold = config.perplexity_threshold;
    } else {
        std::vector<double> ppls;
        const auto& pool = held_sents.empty() ? train_sents : held_sents;
        for (const auto& s : pool)
            if (!s.empty()) ppls.push_back(model.lm.sentence_perplexity(s));
        model.perplexity_threshold = percentile(ppls, config.perplexity_percentile);
    }
    return model;
}

namespace {

struct DocOutcome {
    bool kept = false;
    DropReason histogram_reason = DropReason::None;
    bool gibberish = false;
    uint64_t sentences_dropped = 0;
    uint64_t runs_reduced = 0;
    uint64_t chars_in = 0;
    uint64_t chars_out = 0;
    Document doc;
};

DocOutcome clean_one(const Document& input, const CleaningModel& model,
                     const CleaningConfig& config) {
    DocOutcome out;
    out.chars_in = char_histogram(input.text).total;

    ForeignReduction reduced = reduce_foreign(input.text);
    out.runs_reduced = reduced.runs_reduced;

    CharHistogram hist = char_histogram(reduced.text);
    out.histogram_reason = histogram_filter(hist, config);
    if (out.histogram_reason != DropReason::None) return out;

    if (model.lm.gibberish_score(reduced.text) > config.gibberish_threshold) {
        out.gibberish = true;
        return out;
    }

    SentenceSegments segs = segment_sentences(reduced.text);
    std::string rebuilt = segs.leading;
    uint64_t survivors = 0;
    for (const auto& span : segs.sentences) {
        if (model.lm.sentence_perplexity(span.text) > model.perplexity_threshold) {
            out.sentences_dropped++;
            continue;
        }
        rebuilt += span.text;
        rebuilt += span.separator;
        survivors++;
    }
    if (survivors == 0) {
        // Nothing fluent left; counted as a gibberish-category drop.
        out.gibberish = true;
        return out;
    }

    out.kept = true;
    out.doc = Document{input.id, input.source, std::move(rebuilt)};
    out.chars_out = char_histogram(out.doc.text).total;
    return out;
}

} // namespace

CleaningResult clean_corpus(const std::vector<Document>& docs, const CleaningModel& model,
                            const CleaningConfig& config, int threads) {
    config.validate();
    std::vector<DocOutcome> outcomes(docs.size());

    if (threads <= 1 || docs.size() < 2) {
        for (size_t i = 0; i < docs.size(); ++i) outcomes[i] = clean_one(docs[i], model, config);
    } else {
        size_t n = docs.size();
        size_t workers = std::min<size_t>(threads, n);
        std::vector<std::future<void>> futures;
        for (size_t w = 0; w < workers; ++w) {
            futures.push_back(std::async(std::launch::async, [&, w] {
                for (size_t i = w; i < n; i += workers)
                    outcomes[i] = clean_one(docs[i], model, config);
            }));
        }
        for (auto& f : futures) f.get();
    }

    CleaningResult result;
    uint64_t chars_in = 0;
    uint64_t chars_out = 0;
    result.report.total_docs = docs.size();
    for (auto& out : outcomes) {
        chars_in += out.chars_in;
        chars_out += out.chars_out;
        result.report.foreign_runs_reduced += out.runs_reduced;
        result.report.sentences_dropped_by_perplexity += out.sentences_dropped;
        if (out.kept) {
            result.report.kept_docs++;
            result.docs.push_back(std::move(out.doc));
        } else if (out.histogram_reason != DropReason::None) {
            result.report.dropped_by_histogram++;
        } else {
            result.report.dropped_by_gibberish++;
        }
    }
    if (result.report.total_docs > 0) {
        result.report.removal_fraction =
            1.0 - static_cast<double>(result.report.kept_docs) /
                      static_cast<double>(result.report.total_docs);
    }
    if (chars_in > 0) {
        result.report.removal_fraction_chars =
            1.0 - static_cast<double>(chars_out) / static_cast<double>(chars_in);
    }
    return result;
}

CleaningResult clean_corpus_jsonl(const std::string& jsonl, const CleaningModel& model,
                                  const CleaningConfig& config, int threads) {
    JsonlReadStats stats;
    std::vector<Document> docs = parse_documents(jsonl, &stats);
    CleaningResult result = clean_corpus(docs, model, config, threads);
    result.report.skipped_malformed = stats.malformed;
    return result;
}

} // namespace lmforge
