#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lmforge/document.hpp"
#include "lmforge/instruct.hpp"

namespace lmforge {

/// Synthetic bilingual fixture corpus (Hebrew-script plus Latin words drawn
/// from Zipf-distributed generated vocabularies). No real corpus text is
/// redistributed; everything here is reproducible from the seed.
struct FixtureOptions {
    uint64_t seed = 7;
    size_t modern_docs = 420;      // clean documents in the raw modern corpus
    size_t dirty_docs = 60;        // engineered histogram/gibberish offenders
    size_t foreign_docs = 40;      // clean docs salted with foreign-script runs
    size_t rabbinic_docs = 140;    // second-register corpus (smaller; oversampled)
    size_t seed_docs = 220;        // trusted seed for the cleaning scorer
    size_t qa_records = 220;
    size_t translated_records = 140;
};

struct FixtureBundle {
    std::vector<Document> modern_raw;
    std::vector<Document> rabbinic;
    std::vector<Document> seed;
    std::vector<QARecord> qa;
    std::vector<std::pair<std::string, std::string>> translated;
};

FixtureBundle generate_fixture(const FixtureOptions& options);

/// Writes modern_raw.jsonl, rabbinic.jsonl, seed.jsonl, qa.jsonl,
/// translated.jsonl under dir (created if missing).
void write_fixture(const FixtureBundle& bundle, const std::string& dir);

} // namespace lmforge
