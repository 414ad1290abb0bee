#include "lmforge/bpe.hpp"

#include "lmforge/script.hpp"
#include "lmforge/utf8.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace lmforge {

namespace {

inline uint64_t pack_pair(TokenId l, TokenId r) {
    return (static_cast<uint64_t>(l) << 32) | static_cast<uint64_t>(r);
}

inline bool is_ascii_ws(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

/// Splits text around literal special-token strings (longest match wins).
struct Segment {
    bool is_special = false;
    TokenId special_id = 0;
    std::string literal;
};

std::vector<Segment> split_specials(const TokenizerModel& model, std::string_view text) {
    std::vector<std::pair<std::string, TokenId>> specials = model.special_tokens;
    std::sort(specials.begin(), specials.end(),
              [](const auto& a, const auto& b) { return a.first.size() > b.first.size(); });

    std::vector<Segment> segments;
    std::string pending;
    size_t i = 0;
    while (i < text.size()) {
        bool matched = false;
        for (const auto& [name, id] : specials) {
            if (name.empty() || i + name.size() > text.size()) continue;
            if (text.compare(i, name.size(), name) == 0) {
                if (!pending.empty()) {
                    segments.push_back({false, 0, std::move(pending)});
                    pending.clear();
                }
                segments.push_back({true, id, {}});
                i += name.size();
                matched = true;
                break;
            }
        }
        if (!matched) {
            pending += text[i];
            ++i;
        }
    }
    if (!pending.empty()) segments.push_back({false, 0, std::move(pending)});
    return segments;
}

struct WordEntry {
    std::vector<TokenId> symbols;
    uint64_t freq = 0;
};

void count_word_pairs(const WordEntry& word, int64_t sign,
                      std::unordered_map<uint64_t, int64_t>& pair_count,
                      std::unordered_map<uint64_t, std::unordered_set<uint32_t>>* pair_words,
                      uint32_t word_index) {
    const auto& syms = word.symbols;
    for (size_t i = 0; i + 1 < syms.size(); ++i) {
        uint64_t key = pack_pair(syms[i], syms[i + 1]);
        pair_count[key] += sign * static_cast<int64_t>(word.freq);
        if (pair_words && sign > 0) (*pair_words)[key].insert(word_index);
    }
}

std::vector<TokenId> apply_merge(const std::vector<TokenId>& syms, TokenId left, TokenId right,
                                 TokenId merged) {
    std::vector<TokenId> out;
    out.reserve(syms.size());
    size_t i = 0;
    while (i < syms.size()) {
        if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
            out.push_back(merged);
            i += 2;
        } else {
            out.push_back(syms[i]);
            ++i;
        }
    }
    return out;
}

} // namespace

TokenId TokenizerModel::special_id(std::string_view name) const {
    for (const auto& [n, id] : special_tokens)
        if (n == name) return id;
    throw std::out_of_range("unknown special token: " + std::string(name));
}

std::vector<std::string> pre_tokenize(std::string_view text) {
    std::vector<std::string> out;
    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        if (!is_ascii_ws(text[i])) {
            size_t j = i;
            while (j < n && !is_ascii_ws(text[j])) ++j;
            out.emplace_back(text.substr(i, j - i));
            i = j;
        } else {
            size_t j = i;
            while (j < n && is_ascii_ws(text[j])) ++j;
            if (j < n && text[j - 1] == ' ') {
                // The last space of the run becomes the word's leading marker.
                if (j - 1 > i) out.emplace_back(text.substr(i, j - 1 - i));
                size_t k = j;
                while (k < n && !is_ascii_ws(text[k])) ++k;
                out.emplace_back(text.substr(j - 1, k - (j - 1)));
                i = k;
            } else {
                out.emplace_back(text.substr(i, j - i));
                i = j;
            }
        }
    }
    return out;
}

TokenizerModel train_bpe(const std::vector<std::string>& texts, size_t vocab_size,
                         const std::vector<std::string>& special_tokens) {
    if (texts.empty()) throw std::invalid_argument("train_bpe: empty corpus");
    if (vocab_size < 256 + special_tokens.size())
        throw std::invalid_argument(
            "train_bpe: vocab_size must be at least 256 + special token count");

    TokenizerModel model;
    model.vocab.reserve(vocab_size);
    for (int b = 0; b < 256; ++b) model.vocab.push_back(std::string(1, static_cast<char>(b)));
    for (const auto& name : special_tokens) {
        model.special_tokens.emplace_back(name, static_cast<TokenId>(model.vocab.size()));
        model.vocab.push_back(name);
    }

    // Word frequency table over pre-tokens; special-token literals never
    // participate in merges.
    std::unordered_map<std::string, uint64_t> word_freq;
    bool any_text = false;
    for (const auto& text : texts) {
        if (!text.empty()) any_text = true;
        for (const auto& segment : split_specials(model, text)) {
            if (segment.is_special) continue;
            for (auto& word : pre_tokenize(segment.literal)) word_freq[word] += 1;
        }
    }
    if (!any_text) throw std::invalid_argument("train_bpe: empty corpus");

    std::vector<std::string> keys;
    keys.reserve(word_freq.size());
    for (const auto& [w, _] : word_freq) keys.push_back(w);
    std::sort(keys.begin(), keys.end());

    std::vector<WordEntry> words;
    words.reserve(keys.size());
    for (const auto& key : keys) {
        WordEntry entry;
        entry.freq = word_freq[key];
        entry.symbols.reserve(key.size());
        for (unsigned char c : key) entry.symbols.push_back(c);
        words.push_back(std::move(entry));
    }

    std::unordered_map<uint64_t, int64_t> pair_count;
    std::unordered_map<uint64_t, std::unordered_set<uint32_t>> pair_words;
    for (uint32_t w = 0; w < words.size(); ++w)
        count_word_pairs(words[w], +1, pair_count, &pair_words, w);

    size_t merge_budget = vocab_size - 256 - special_tokens.size();
    while (model.merges.size() < merge_budget) {
        // Highest count; ties by lexicographically smallest byte sequences,
        // then smallest ids (distinct ids can share a byte sequence).
        bool found = false;
        int64_t best_count = 0;
        TokenId best_l = 0, best_r = 0;
        for (const auto& [key, count] : pair_count) {
            if (count <= 0) continue;
            TokenId l = static_cast<TokenId>(key >> 32);
            TokenId r = static_cast<TokenId>(key & 0xFFFFFFFFu);
            if (!found || count > best_count) {
                found = true;
                best_count = count;
                best_l = l;
                best_r = r;
                continue;
            }
            if (count < best_count) continue;
            auto candidate = std::tie(model.vocab[l], model.vocab[r], l, r);
            auto incumbent = std::tie(model.vocab[best_l], model.vocab[best_r], best_l, best_r);
            if (candidate < incumbent) {
                best_l = l;
                best_r = r;
            }
        }
        if (!found) break;

        TokenId merged = static_cast<TokenId>(model.vocab.size());
        model.vocab.push_back(model.vocab[best_l] + model.vocab[best_r]);
        model.merges.emplace_back(best_l, best_r);

        uint64_t key = pack_pair(best_l, best_r);
        auto touched_it = pair_words.find(key);
        if (touched_it == pair_words.end()) continue;
        std::vector<uint32_t> touched(touched_it->second.begin(), touched_it->second.end());
        std::sort(touched.begin(), touched.end());
        for (uint32_t w : touched) {
            count_word_pairs(words[w], -1, pair_count, nullptr, w);
            words[w].symbols = apply_merge(words[w].symbols, best_l, best_r, merged);
            count_word_pairs(words[w], +1, pair_count, &pair_words, w);
        }
        pair_count.erase(key);
        pair_words.erase(key);
    }
    return model;
}

TokenizerModel train_bpe(const std::vector<Document>& corpus, size_t vocab_size,
                         const std::vector<std::string>& special_tokens) {
    std::vector<std::string> texts;
    texts.reserve(corpus.size());
    for (const auto& doc : corpus) texts.push_back(doc.text);
    return train_bpe(texts, vocab_size, special_tokens);
}

std::vector<TokenId> encode(const TokenizerModel& model, std::string_view text) {
    // Merge lookup: pair -> (rank, merged id).
    std::unordered_map<uint64_t, std::pair<uint32_t, TokenId>> ranks;
    ranks.reserve(model.merges.size());
    TokenId first_merge_id = static_cast<TokenId>(256 + model.special_tokens.size());
    for (uint32_t rank = 0; rank < model.merges.size(); ++rank) {
        const auto& [l, r] = model.merges[rank];
        ranks[pack_pair(l, r)] = {rank, first_merge_id + rank};
    }

    std::vector<TokenId> out;
    for (const auto& segment : split_specials(model, text)) {
        if (segment.is_special) {
            out.push_back(segment.special_id);
            continue;
        }
        for (const auto& word : pre_tokenize(segment.literal)) {
            std::vector<TokenId> syms;
            syms.reserve(word.size());
            for (unsigned char c : word) syms.push_back(c);
            while (syms.size() >= 2) {
                uint32_t best_rank = UINT32_MAX;
                TokenId best_merged = 0;
                TokenId best_l = 0, best_r = 0;
                for (size_t i = 0; i + 1 < syms.size(); ++i) {
                    auto it = ranks.find(pack_pair(syms[i], syms[i + 1]));
                    if (it != ranks.end() && it->second.first < best_rank) {
                        best_rank = it->second.first;
                        best_merged = it->second.second;
                        best_l = syms[i];
                        best_r = syms[i + 1];
                    }
                }
                if (best_rank == UINT32_MAX) break;
                syms = apply_merge(syms, best_l, best_r, best_merged);
            }
            out.insert(out.end(), syms.begin(), syms.end());
        }
    }
    return out;
}

std::string decode(const TokenizerModel& model, const std::vector<TokenId>& ids) {
    std::string out;
    for (TokenId id : ids) {
        if (id >= model.vocab.size())
            throw std::out_of_range("decode: token id " + std::to_string(id) +
                                    " out of range (vocab " + std::to_string(model.vocab.size()) +
                                    ")");
        out += model.vocab[id];
    }
    return out;
}

FertilityStats fertility(const TokenizerModel& model, const std::vector<Document>& corpus) {
    if (corpus.empty()) throw std::invalid_argument("fertility: empty corpus");
    FertilityStats stats;
    for (const auto& doc : corpus) {
        stats.token_count += encode(model, doc.text).size();
        bool in_word = false;
        size_t pos = 0;
        std::string_view text = doc.text;
        while (pos < text.size()) {
            char32_t cp = decode_utf8(text, pos);
            if (classify_codepoint(cp) == ScriptClass::Space) {
                in_word = false;
            } else {
                stats.char_count++;
                if (!in_word) {
                    stats.word_count++;
                    in_word = true;
                }
            }
        }
    }
    if (stats.word_count == 0) throw std::invalid_argument("fertility: corpus has no words");
    stats.tokens_per_word =
        static_cast<double>(stats.token_count) / static_cast<double>(stats.word_count);
    stats.tokens_per_char =
        static_cast<double>(stats.token_count) / static_cast<double>(stats.char_count);
    return stats;
}

std::string FertilityStats::to_json() const {
    nlohmann::ordered_json j;
    j["tokens_per_word"] = tokens_per_word;
    j["tokens_per_char"] = tokens_per_char;
    j["word_count"] = word_count;
    j["char_count"] = char_count;
    j["token_count"] = token_count;
    return j.dump(2);
}

namespace {

std::string to_hex(const std::string& bytes) {
    static const char* digits = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (unsigned char c : bytes) {
        out += digits[c >> 4];
        out += digits[c & 0xF];
    }
    return out;
}

std::string from_hex(const std::string& hex, const std::string& origin) {
    if (hex.size() % 2 != 0)
        throw std::runtime_error(origin + ": odd-length hex vocab entry '" + hex + "'");
    auto nibble = [&](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        throw std::runtime_error(origin + ": invalid hex digit in vocab entry '" + hex + "'");
    };
    std::string out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2)
        out += static_cast<char>((nibble(hex[i]) << 4) | nibble(hex[i + 1]));
    return out;
}

} // namespace

std::string model_to_json(const TokenizerModel& model) {
    nlohmann::ordered_json j;
    j["version"] = "bpe-v1";
    auto& vocab = j["vocab"] = nlohmann::ordered_json::array();
    for (const auto& entry : model.vocab) vocab.push_back(to_hex(entry));
    auto& merges = j["merges"] = nlohmann::ordered_json::array();
    for (const auto& [l, r] : model.merges) merges.push_back({l, r});
    auto& special = j["special"] = nlohmann::ordered_json::object();
    for (const auto& [name, id] : model.special_tokens) special[name] = id;
    return j.dump();
}

void save_model(const TokenizerModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write tokenizer model: " + path);
    out << model_to_json(model) << '\n';
}

TokenizerModel model_from_json(const std::string& json_text, const std::string& origin) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(origin + ": tokenizer model parse error: " + e.what());
    }
    if (!j.is_object() || !j.contains("version"))
        throw std::runtime_error(origin + ": missing 'version' field");
    if (j["version"] != "bpe-v1")
        throw std::runtime_error(origin + ": unsupported tokenizer format version");
    if (!j.contains("vocab") || !j["vocab"].is_array())
        throw std::runtime_error(origin + ": missing 'vocab' array");
    if (!j.contains("merges") || !j["merges"].is_array())
        throw std::runtime_error(origin + ": missing 'merges' array");
    if (!j.contains("special") || !j["special"].is_object())
        throw std::runtime_error(origin + ": missing 'special' object");

    TokenizerModel model;
    for (const auto& entry : j["vocab"]) {
        if (!entry.is_string())
            throw std::runtime_error(origin + ": vocab entries must be hex strings");
        model.vocab.push_back(from_hex(entry.get<std::string>(), origin));
    }
    if (model.vocab.size() < 256)
        throw std::runtime_error(origin + ": vocab must contain the 256 byte tokens");
    for (int b = 0; b < 256; ++b)
        if (model.vocab[b].size() != 1 ||
            static_cast<unsigned char>(model.vocab[b][0]) != b)
            throw std::runtime_error(origin + ": vocab id " + std::to_string(b) +
                                     " is not the corresponding single byte");

    for (const auto& entry : j["merges"]) {
        if (!entry.is_array() || entry.size() != 2)
            throw std::runtime_error(origin + ": each merge must be an [id,id] pair");
        TokenId l = entry[0].get<TokenId>();
        TokenId r = entry[1].get<TokenId>();
        if (l >= model.vocab.size() || r >= model.vocab.size())
            throw std::runtime_error(origin + ": merge references out-of-range id");
        model.merges.emplace_back(l, r);
    }

    // Specials keep file order via the ordered parse? nlohmann::json sorts
    // object keys, so re-order by id to keep serialization canonical.
    std::vector<std::pair<std::string, TokenId>> specials;
    for (const auto& [name, id] : j["special"].items())
        specials.emplace_back(name, id.get<TokenId>());
    std::sort(specials.begin(), specials.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    for (const auto& [name, id] : specials) {
        if (id >= model.vocab.size())
            throw std::runtime_error(origin + ": special token id out of range: " + name);
        if (model.vocab[id] != name)
            throw std::runtime_error(origin + ": special token '" + name +
                                     "' does not match vocab entry " + std::to_string(id));
        model.special_tokens.emplace_back(name, id);
    }

    // Merge chain consistency: output id 256+|special|+k concatenates its inputs.
    TokenId first_merge_id = static_cast<TokenId>(256 + model.special_tokens.size());
    if (model.vocab.size() != first_merge_id + model.merges.size())
        throw std::runtime_error(origin + ": vocab size does not match merge count");
    for (size_t k = 0; k < model.merges.size(); ++k) {
        const auto& [l, r] = model.merges[k];
        if (model.vocab[first_merge_id + k] != model.vocab[l] + model.vocab[r])
            throw std::runtime_error(origin + ": merge " + std::to_string(k) +
                                     " output does not concatenate its inputs");
    }
    return model;
}

TokenizerModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open tokenizer model: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return model_from_json(buf.str(), path);
}

} // namespace lmforge
