#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace lmforge {

/// One corpus record. `text` is UTF-8; `source` is a free-form tag carried
/// through cleaning and mixing.
struct Document {
    std::string id;
    std::string source;
    std::string text;

    bool operator==(const Document&) const = default;
};

struct JsonlReadStats {
    uint64_t lines = 0;
    uint64_t records = 0;
    uint64_t malformed = 0; // unparsable JSON, invalid UTF-8, or missing fields
};

/// Reads a JSON Lines corpus: one {"id","source","text"} object per line.
/// Malformed lines are skipped and counted, never fatal. Blank lines are
/// ignored and not counted as malformed.
std::vector<Document> read_documents(const std::string& path, JsonlReadStats* stats = nullptr);

/// Parses documents from an in-memory JSONL buffer (same skipping rules).
std::vector<Document> parse_documents(const std::string& jsonl, JsonlReadStats* stats = nullptr);

void write_documents(const std::string& path, const std::vector<Document>& docs);
std::string documents_to_jsonl(const std::vector<Document>& docs);

} // namespace lmforge
