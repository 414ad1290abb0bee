#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lmforge/rng.hpp"

namespace lmforge {

/// Extractive QA training record; answer_span must occur in context at byte
/// offset answer_start.
struct QARecord {
    std::string context;
    std::string question;
    std::string answer_span;
    size_t answer_start = 0;

    void validate() const; // throws std::invalid_argument on a bad span
};

struct InstructRecord {
    std::optional<std::string> system;
    std::string prompt;
    std::string response;
};

enum class ResponseTransform {
    Identity,
    WrapInSentence,          // pattern with {answer} placeholder
    AppendSupportingSentence,
    SentenceCount,           // system text embeds {n} = sentence count
};

struct DirectiveTemplate {
    std::string name;
    std::string system_text; // may contain {n}
    ResponseTransform transform = ResponseTransform::Identity;
    std::string pattern;     // WrapInSentence only
};

/// Directive wording lives in a config file, not code.
struct TemplateRegistry {
    std::string base_instruction;
    std::string separator; // appended to the newline between chat segments
    std::vector<DirectiveTemplate> qa_directives;
    std::string concise_text;
    std::string expand_text;
    std::string exact_count_text; // contains {n}

    static TemplateRegistry from_json_file(const std::string& path);
    static TemplateRegistry from_json(const std::string& json_text,
                                      const std::string& origin = "<memory>");
    static TemplateRegistry builtin_default();
    std::string to_json() const;
};

/// Probability that a QA record gets a formatting directive on top of the
/// base instruction.
inline constexpr double kDirectiveProbability = 0.60;

/// prompt = context + "\n" + question; system = base instruction, extended by
/// a uniformly drawn directive with probability 0.60, in which case the
/// response is that directive's transformation of the answer span.
InstructRecord format_qa(const QARecord& rec, const TemplateRegistry& registry, Rng& rng);

/// Directive for a translated record, keyed on sentence count s of the
/// response: s <= 2 draws from {concise, answer-in-s-sentences}, s >= 3 from
/// {expand, answer-in-s-sentences}.
struct LengthDirective {
    std::string name; // "concise" | "expand" | "exact-count"
    std::string system_text;
};

LengthDirective length_directive(const std::string& response, const TemplateRegistry& registry,
                                 Rng& rng);

/// Exactly three records per translated pair: one without a system prompt
/// and two with distinct length-based directives. All share prompt=question.
std::vector<InstructRecord> expand_translated(const std::string& question,
                                              const std::string& response,
                                              const TemplateRegistry& registry, Rng& rng);

// JSONL file formats (UTF-8, one object per line).
std::vector<QARecord> read_qa_records(const std::string& path);
std::vector<std::pair<std::string, std::string>> read_translated_records(const std::string& path);
void write_instruct_records(const std::string& path, const std::vector<InstructRecord>& records);
std::vector<InstructRecord> read_instruct_records(const std::string& path);

/// Full corpus build: every QA record through format_qa, every translated
/// pair through expand_translated, with order-independent per-record RNG
/// streams derived from (seed, record index).
std::vector<InstructRecord> build_instruct_corpus(
    const std::vector<QARecord>& qa,
    const std::vector<std::pair<std::string, std::string>>& translated,
    const TemplateRegistry& registry, uint64_t seed);

} // namespace lmforge
