#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace lmforge {

/// Script classification used by corpus cleaning. Total over all codepoints:
/// anything that is not Hebrew, Latin, Digit, Punct or Space is Foreign.
enum class ScriptClass : uint8_t {
    Hebrew = 0,
    Latin = 1,
    Digit = 2,
    Punct = 3,
    Space = 4,
    Foreign = 5,
};

inline constexpr size_t kScriptClassCount = 6;

const char* to_string(ScriptClass cls);

/// Hebrew covers U+0590-U+05FF and the presentation forms U+FB1D-U+FB4F.
/// Latin covers ASCII A-Z/a-z only. Digit is ASCII 0-9. Space covers the
/// usual Unicode whitespace. Punct covers ASCII punctuation, Latin-1
/// punctuation/symbols and the general punctuation block.
ScriptClass classify_codepoint(char32_t cp);

/// The token substituted for runs of foreign-script words.
inline constexpr std::string_view kForeignToken = "<foreign>";

struct ForeignReduction {
    std::string text;
    uint64_t runs_reduced = 0;
};

/// Collapses each maximal run of whitespace-separated foreign words (words
/// with at least one Foreign codepoint and no Hebrew/Latin letters) to a
/// single "<foreign>". Words mixing Hebrew/Latin with foreign letters keep
/// their place but lose the foreign codepoints. Everything else, including
/// whitespace outside collapsed runs, is preserved byte-for-byte. Idempotent.
ForeignReduction reduce_foreign(std::string_view text);

struct CharHistogram {
    std::array<uint64_t, kScriptClassCount> counts{};
    uint64_t total = 0;
    uint64_t longest_run = 0; // longest run of one repeated codepoint

    uint64_t count(ScriptClass cls) const { return counts[static_cast<size_t>(cls)]; }
    double fraction(ScriptClass cls) const {
        return total == 0 ? 0.0 : static_cast<double>(count(cls)) / static_cast<double>(total);
    }
    /// Fraction of codepoints that are not Hebrew/Latin letters.
    double non_letter_fraction() const {
        if (total == 0) return 0.0;
        uint64_t letters = count(ScriptClass::Hebrew) + count(ScriptClass::Latin);
        return static_cast<double>(total - letters) / static_cast<double>(total);
    }
    double longest_run_fraction() const {
        return total == 0 ? 0.0 : static_cast<double>(longest_run) / static_cast<double>(total);
    }
};

CharHistogram char_histogram(std::string_view text);

} // namespace lmforge
