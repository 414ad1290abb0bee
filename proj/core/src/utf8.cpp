#include "lmforge/utf8.hpp"

namespace lmforge {

namespace {

constexpr char32_t kReplacement = 0xFFFD;

inline bool is_cont(unsigned char c) { return (c & 0xC0) == 0x80; }

} // namespace

char32_t decode_utf8(std::string_view text, size_t& pos) {
    unsigned char c0 = static_cast<unsigned char>(text[pos]);
    if (c0 < 0x80) {
        pos += 1;
        return c0;
    }
    if ((c0 & 0xE0) == 0xC0 && pos + 1 < text.size() && is_cont(text[pos + 1])) {
        char32_t cp = (static_cast<char32_t>(c0 & 0x1F) << 6) |
                      (static_cast<unsigned char>(text[pos + 1]) & 0x3F);
        pos += 2;
        return cp < 0x80 ? kReplacement : cp;
    }
    if ((c0 & 0xF0) == 0xE0 && pos + 2 < text.size() && is_cont(text[pos + 1]) &&
        is_cont(text[pos + 2])) {
        char32_t cp = (static_cast<char32_t>(c0 & 0x0F) << 12) |
                      ((static_cast<unsigned char>(text[pos + 1]) & 0x3F) << 6) |
                      (static_cast<unsigned char>(text[pos + 2]) & 0x3F);
        pos += 3;
        if (cp < 0x800 || (cp >= 0xD800 && cp <= 0xDFFF)) return kReplacement;
        return cp;
    }
    if ((c0 & 0xF8) == 0xF0 && pos + 3 < text.size() && is_cont(text[pos + 1]) &&
        is_cont(text[pos + 2]) && is_cont(text[pos + 3])) {
        char32_t cp = (static_cast<char32_t>(c0 & 0x07) << 18) |
                      ((static_cast<unsigned char>(text[pos + 1]) & 0x3F) << 12) |
                      ((static_cast<unsigned char>(text[pos + 2]) & 0x3F) << 6) |
                      (static_cast<unsigned char>(text[pos + 3]) & 0x3F);
        pos += 4;
        if (cp < 0x10000 || cp > 0x10FFFF) return kReplacement;
        return cp;
    }
    pos += 1;
    return kReplacement;
}

std::vector<char32_t> decode_utf8(std::string_view text) {
    std::vector<char32_t> out;
    out.reserve(text.size());
    size_t pos = 0;
    while (pos < text.size()) out.push_back(decode_utf8(text, pos));
    return out;
}

bool is_valid_utf8(std::string_view text) {
    size_t pos = 0;
    while (pos < text.size()) {
        unsigned char c0 = static_cast<unsigned char>(text[pos]);
        size_t len;
        char32_t cp;
        if (c0 < 0x80) {
            pos += 1;
            continue;
        } else if ((c0 & 0xE0) == 0xC0) {
            len = 2;
            cp = c0 & 0x1F;
        } else if ((c0 & 0xF0) == 0xE0) {
            len = 3;
            cp = c0 & 0x0F;
        } else if ((c0 & 0xF8) == 0xF0) {
            len = 4;
            cp = c0 & 0x07;
        } else {
            return false;
        }
        if (pos + len > text.size()) return false;
        for (size_t i = 1; i < len; ++i) {
            unsigned char c = static_cast<unsigned char>(text[pos + i]);
            if (!is_cont(c)) return false;
            cp = (cp << 6) | (c & 0x3F);
        }
        static constexpr char32_t kMin[5] = {0, 0, 0x80, 0x800, 0x10000};
        if (cp < kMin[len]) return false;                  // overlong
        if (cp >= 0xD800 && cp <= 0xDFFF) return false;    // surrogate
        if (cp > 0x10FFFF) return false;
        pos += len;
    }
    return true;
}

void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out += static_cast<char>(cp);
    } else if (cp < 0x800) {
        out += static_cast<char>(0xC0 | (cp >> 6));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else if (cp < 0x10000) {
        out += static_cast<char>(0xE0 | (cp >> 12));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    } else {
        out += static_cast<char>(0xF0 | (cp >> 18));
        out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
        out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
        out += static_cast<char>(0x80 | (cp & 0x3F));
    }
}

std::string encode_utf8(const std::vector<char32_t>& cps) {
    std::string out;
    out.reserve(cps.size() * 2);
    for (char32_t cp : cps) append_utf8(out, cp);
    return out;
}

} // namespace lmforge
