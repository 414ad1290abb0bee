#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lmforge/char_lm.hpp"
#include "lmforge/document.hpp"
#include "lmforge/script.hpp"

namespace lmforge {

struct CleaningConfig {
    double max_non_letter_fraction = 0.5;
    double max_digit_fraction = 0.3;
    double max_run_fraction = 0.2;
    double gibberish_threshold = 0.5;     // score above this drops the document
    double perplexity_threshold = 0.0;    // 0 = calibrate from held-out seed text
    double perplexity_percentile = 97.5;  // used when calibrating
    int ngram_order = 5;
    double smoothing = 0.25;

    void validate() const; // throws std::invalid_argument

    static CleaningConfig from_json_file(const std::string& path);
    std::string to_json() const;
};

struct CleaningReport {
    uint64_t total_docs = 0;
    uint64_t kept_docs = 0;
    uint64_t dropped_by_histogram = 0;
    // Documents failing the gibberish threshold, plus documents left with no
    // surviving sentence after perplexity filtering (fluency drops).
    uint64_t dropped_by_gibberish = 0;
    uint64_t sentences_dropped_by_perplexity = 0;
    uint64_t foreign_runs_reduced = 0;
    uint64_t skipped_malformed = 0; // not part of total_docs
    double removal_fraction = 0.0;       // documents: 1 - kept/total
    double removal_fraction_chars = 0.0; // codepoints removed / codepoints in

    std::string to_json() const;
    static CleaningReport from_json_file(const std::string& path);
};

enum class DropReason { None, NonLetter, Digit, Run };

const char* to_string(DropReason reason);

/// Keep/drop decision for one histogram. The first exceeded threshold, in
/// the fixed order non-letter -> digit -> run, names the reason.
DropReason histogram_filter(const CharHistogram& hist, const CleaningConfig& config);

/// Trains the perplexity/gibberish scorer on a trusted seed corpus and fixes
/// the perplexity threshold. Seed sentences are split 9:1 into training and
/// held-out parts; when config.perplexity_threshold is 0, the threshold is
/// the configured percentile of held-out sentence perplexity.
struct CleaningModel {
    CharLm lm;
    double perplexity_threshold = 0.0;

    static CleaningModel build(const std::vector<Document>& seed_docs,
                               const CleaningConfig& config);
};

struct CleaningResult {
    std::vector<Document> docs;
    CleaningReport report;
};

/// Full per-document pipeline, in order: reduce_foreign, histogram filter,
/// gibberish filter, per-sentence perplexity filter (survivors rejoined with
/// their original separators; a document with no surviving sentence is
/// dropped). Output order equals input order. `threads` > 1 processes
/// documents in parallel with identical results.
CleaningResult clean_corpus(const std::vector<Document>& docs, const CleaningModel& model,
                            const CleaningConfig& config, int threads = 1);

/// Convenience wrapper that also counts malformed records from a JSONL read.
CleaningResult clean_corpus_jsonl(const std::string& jsonl, const CleaningModel& model,
                                  const CleaningConfig& config, int threads = 1);

} // namespace lmforge
