#include "lmforge/sentences.hpp"

#include "lmforge/script.hpp"
#include "lmforge/utf8.hpp"

namespace lmforge {

namespace {

bool is_terminal(char32_t cp) { return cp == '.' || cp == '!' || cp == '?'; }

bool is_space_cp(char32_t cp) { return classify_codepoint(cp) == ScriptClass::Space; }

} // namespace

std::string SentenceSegments::reconstruct() const {
    std::string out = leading;
    for (const auto& s : sentences) {
        out += s.text;
        out += s.separator;
    }
    return out;
}

SentenceSegments segment_sentences(std::string_view text) {
    SentenceSegments result;
    size_t pos = 0;

    // Leading whitespace.
    size_t lead_end = 0;
    while (pos < text.size()) {
        size_t start = pos;
        char32_t cp = decode_utf8(text, pos);
        if (!is_space_cp(cp)) {
            pos = start;
            break;
        }
        lead_end = pos;
    }
    result.leading = std::string(text.substr(0, lead_end));
    pos = lead_end;

    while (pos < text.size()) {
        size_t sent_begin = pos;
        size_t last_non_space_end = pos;
        size_t sent_end = text.size();
        // Scan for a terminator.
        while (pos < text.size()) {
            size_t cp_start = pos;
            char32_t cp = decode_utf8(text, pos);
            if (cp == '\n') {
                sent_end = last_non_space_end; // trailing spaces and the
                pos = cp_start;                // newline join the separator
                break;
            }
            if (!is_space_cp(cp)) last_non_space_end = pos;
            if (is_terminal(cp)) {
                // Absorb the whole terminal run ("...", "?!").
                while (pos < text.size()) {
                    size_t run_start = pos;
                    char32_t next = decode_utf8(text, pos);
                    if (!is_terminal(next)) {
                        pos = run_start;
                        break;
                    }
                }
                last_non_space_end = pos;
                if (pos >= text.size()) {
                    sent_end = pos;
                    break;
                }
                size_t peek = pos;
                char32_t next = decode_utf8(text, peek);
                if (is_space_cp(next)) {
                    sent_end = pos;
                    break;
                }
                // Terminator mid-token ("A.B"): keep scanning.
            }
        }
        // No terminator before end of text: stop at the last non-space.
        if (pos >= text.size() && sent_end > last_non_space_end) sent_end = last_non_space_end;

        // Trailing separator: the whitespace run after the sentence.
        size_t sep_end = sent_end;
        size_t scan = sent_end;
        while (scan < text.size()) {
            size_t cp_start = scan;
            char32_t cp = decode_utf8(text, scan);
            if (!is_space_cp(cp)) {
                scan = cp_start;
                break;
            }
            sep_end = scan;
        }

        SentenceSpan span;
        span.text = std::string(text.substr(sent_begin, sent_end - sent_begin));
        span.separator = std::string(text.substr(sent_end, sep_end - sent_end));
        if (!span.text.empty()) result.sentences.push_back(std::move(span));
        else if (!result.sentences.empty()) result.sentences.back().separator += span.separator;
        else result.leading += span.separator;
        pos = sep_end;
    }
    return result;
}

std::vector<std::string> split_sentences(std::string_view text) {
    SentenceSegments segs = segment_sentences(text);
    std::vector<std::string> out;
    out.reserve(segs.sentences.size());
    for (auto& s : segs.sentences) out.push_back(s.text);
    return out;
}

} // namespace lmforge
