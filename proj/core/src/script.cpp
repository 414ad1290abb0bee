#include "lmforge/script.hpp"

#include "lmforge/utf8.hpp"

#include <vector>

namespace lmforge {

const char* to_string(ScriptClass cls) {
    switch (cls) {
        case ScriptClass::Hebrew: return "hebrew";
        case ScriptClass::Latin: return "latin";
        case ScriptClass::Digit: return "digit";
        case ScriptClass::Punct: return "punct";
        case ScriptClass::Space: return "space";
        case ScriptClass::Foreign: return "foreign";
    }
    return "?";
}

ScriptClass classify_codepoint(char32_t cp) {
    if ((cp >= 0x0590 && cp <= 0x05FF) || (cp >= 0xFB1D && cp <= 0xFB4F))
        return ScriptClass::Hebrew;
    if ((cp >= 'A' && cp <= 'Z') || (cp >= 'a' && cp <= 'z'))
        return ScriptClass::Latin;
    if (cp >= '0' && cp <= '9')
        return ScriptClass::Digit;
    // Whitespace: ASCII controls, NBSP, and the Unicode space/line separators.
    if (cp == ' ' || (cp >= 0x09 && cp <= 0x0D) || cp == 0x85 || cp == 0xA0 ||
        cp == 0x1680 || (cp >= 0x2000 && cp <= 0x200A) || cp == 0x2028 || cp == 0x2029 ||
        cp == 0x202F || cp == 0x205F || cp == 0x3000)
        return ScriptClass::Space;
    // ASCII punctuation/symbols.
    if ((cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
        (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E))
        return ScriptClass::Punct;
    // Latin-1 punctuation and symbols (no letters live in this range).
    if (cp >= 0xA1 && cp <= 0xBF)
        return ScriptClass::Punct;
    // General punctuation block: quotes, dashes, ellipsis, bullets.
    if (cp >= 0x2010 && cp <= 0x205E)
        return ScriptClass::Punct;
    return ScriptClass::Foreign;
}

CharHistogram char_histogram(std::string_view text) {
    CharHistogram hist;
    size_t pos = 0;
    char32_t prev = 0;
    uint64_t run = 0;
    while (pos < text.size()) {
        char32_t cp = decode_utf8(text, pos);
        hist.counts[static_cast<size_t>(classify_codepoint(cp))]++;
        hist.total++;
        if (hist.total > 1 && cp == prev) {
            run++;
        } else {
            run = 1;
        }
        if (run > hist.longest_run) hist.longest_run = run;
        prev = cp;
    }
    return hist;
}

namespace {

struct Word {
    size_t begin; // byte offsets into the original text
    size_t end;
    bool has_foreign = false;
    bool has_letter = false; // Hebrew or Latin

    bool is_foreign_word() const { return has_foreign && !has_letter; }
};

/// Rewrites one word with its Foreign-class codepoints removed.
std::string strip_foreign(std::string_view word) {
    std::string out;
    out.reserve(word.size());
    size_t pos = 0;
    while (pos < word.size()) {
        size_t start = pos;
        char32_t cp = decode_utf8(word, pos);
        if (classify_codepoint(cp) != ScriptClass::Foreign)
            out.append(word.substr(start, pos - start));
    }
    return out;
}

} // namespace

ForeignReduction reduce_foreign(std::string_view text) {
    // Pass 1: locate whitespace-delimited words and classify their content.
    std::vector<Word> words;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t start = pos;
        char32_t cp = decode_utf8(text, pos);
        if (classify_codepoint(cp) == ScriptClass::Space) continue;
        Word w;
        w.begin = start;
        // Extend until the next Space codepoint.
        size_t end = start;
        size_t scan = start;
        while (scan < text.size()) {
            size_t cp_start = scan;
            char32_t c = decode_utf8(text, scan);
            ScriptClass cls = classify_codepoint(c);
            if (cls == ScriptClass::Space) {
                end = cp_start;
                break;
            }
            end = scan;
            if (cls == ScriptClass::Foreign) w.has_foreign = true;
            if (cls == ScriptClass::Hebrew || cls == ScriptClass::Latin) w.has_letter = true;
        }
        w.end = end;
        words.push_back(w);
        pos = end;
    }

    // Pass 2: emit, collapsing maximal runs of foreign words.
    ForeignReduction result;
    result.text.reserve(text.size());
    size_t cursor = 0;
    size_t i = 0;
    while (i < words.size()) {
        const Word& w = words[i];
        result.text.append(text.substr(cursor, w.begin - cursor)); // inter-word whitespace
        if (w.is_foreign_word()) {
            size_t j = i;
            while (j + 1 < words.size() && words[j + 1].is_foreign_word()) ++j;
            result.text.append(kForeignToken);
            result.runs_reduced++;
            cursor = words[j].end;
            i = j + 1;
        } else {
            if (w.has_foreign) {
                result.text.append(strip_foreign(text.substr(w.begin, w.end - w.begin)));
            } else {
                result.text.append(text.substr(w.begin, w.end - w.begin));
            }
            cursor = w.end;
            ++i;
        }
    }
    result.text.append(text.substr(cursor));
    return result;
}

} // namespace lmforge
