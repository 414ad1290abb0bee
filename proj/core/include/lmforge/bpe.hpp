#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "lmforge/document.hpp"

namespace lmforge {

using TokenId = uint32_t;

/// Byte-level BPE model. Ids 0-255 are the single bytes, the reserved
/// special tokens follow, and every merge appends one id. A vocabulary of
/// size k is fully determined by the first k - 256 - |special| merges.
struct TokenizerModel {
    std::vector<std::string> vocab;                    // id -> byte sequence
    std::vector<std::pair<TokenId, TokenId>> merges;   // in training order
    std::vector<std::pair<std::string, TokenId>> special_tokens; // name -> id

    TokenId special_id(std::string_view name) const;   // throws if unknown
    TokenId foreign_id() const { return special_id("<foreign>"); }
    TokenId eod_id() const { return special_id("<eod>"); }
    TokenId pad_id() const { return special_id("<pad>"); }
    size_t vocab_size() const { return vocab.size(); }
};

inline const std::vector<std::string> kDefaultSpecialTokens = {"<foreign>", "<eod>", "<pad>"};

/// Greedy highest-pair-frequency training over whitespace-pre-tokenized byte
/// sequences; ties break on the lexicographically smallest (left bytes,
/// right bytes). Deterministic. Stops early if no pair repeats.
TokenizerModel train_bpe(const std::vector<Document>& corpus, size_t vocab_size,
                         const std::vector<std::string>& special_tokens = kDefaultSpecialTokens);

TokenizerModel train_bpe(const std::vector<std::string>& texts, size_t vocab_size,
                         const std::vector<std::string>& special_tokens = kDefaultSpecialTokens);

/// Byte fallback guarantees every UTF-8 string is encodable; literal special
/// token strings map to their reserved ids.
std::vector<TokenId> encode(const TokenizerModel& model, std::string_view text);

/// Inverse of encode for any valid input: decode(encode(t)) == t.
/// Throws std::out_of_range on an id outside the vocabulary.
std::string decode(const TokenizerModel& model, const std::vector<TokenId>& ids);

/// Lossless whitespace pre-tokenization: a single space directly before a
/// word is attached to it as a leading marker; all other whitespace runs are
/// their own pre-tokens. Concatenation reconstructs the input exactly.
std::vector<std::string> pre_tokenize(std::string_view text);

struct FertilityStats {
    double tokens_per_word = 0.0;
    double tokens_per_char = 0.0;
    uint64_t word_count = 0;
    uint64_t char_count = 0; // codepoints, whitespace excluded
    uint64_t token_count = 0;

    std::string to_json() const;
};

/// Aggregate fertility over a corpus. Words are whitespace-delimited; a
/// literal special token counts as one word. Throws if there are no words.
FertilityStats fertility(const TokenizerModel& model, const std::vector<Document>& corpus);

/// Canonical JSON serialization; save -> load -> save is byte-identical.
void save_model(const TokenizerModel& model, const std::string& path);
std::string model_to_json(const TokenizerModel& model);
TokenizerModel load_model(const std::string& path);
TokenizerModel model_from_json(const std::string& json_text, const std::string& origin = "<memory>");

} // namespace lmforge
