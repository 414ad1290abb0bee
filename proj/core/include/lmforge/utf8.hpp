#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace lmforge {

/// Decodes one UTF-8 codepoint starting at text[pos]. Advances pos past the
/// sequence. Returns U+FFFD and advances by one byte on malformed input.
char32_t decode_utf8(std::string_view text, size_t& pos);

/// Full decode; malformed bytes become U+FFFD.
std::vector<char32_t> decode_utf8(std::string_view text);

/// Strict validation (rejects overlong forms, surrogates, out-of-range).
bool is_valid_utf8(std::string_view text);

void append_utf8(std::string& out, char32_t cp);
std::string encode_utf8(const std::vector<char32_t>& cps);

} // namespace lmforge
