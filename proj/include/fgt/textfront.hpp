#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace fgt {

struct EmptyInput : std::runtime_error { explicit EmptyInput(const std::string& m) : std::runtime_error(m) {} };
struct UnknownSymbol : std::runtime_error { explicit UnknownSymbol(const std::string& m) : std::runtime_error(m) {} };
struct LexiconError : std::runtime_error { explicit LexiconError(const std::string& m) : std::runtime_error(m) {} };

/// Pronunciation lexicon. Phoneme IDs are the 0-based positions in
/// `phoneme_inventory`; entries are pre-resolved to IDs at load time so every
/// symbol is validated against the inventory exactly once.
struct Lexicon {
    std::vector<std::string> phoneme_inventory;
    std::unordered_map<std::string, int> symbol_ids;
    std::unordered_map<std::string, std::vector<int>> entries;

    /// File format: first line `#inventory: p1 p2 ...`, then one entry per
    /// line, `word<TAB>ph1 ph2 ...`. `#` lines and blank lines are ignored.
    static Lexicon parse(const std::string& text);
    static Lexicon load_file(const std::string& path);

    /// -1 when the symbol is not in the inventory.
    int id_of(const std::string& symbol) const;
};

/// Half-open range [begin, end) into an utterance's phoneme_ids.
struct Span {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::size_t length() const { return end - begin; }
};

struct Utterance {
    std::vector<std::string> words;
    std::vector<int> phoneme_ids;
    std::vector<Span> spans;  // one per word, contiguous, jointly covering phoneme_ids
};

/// Whitespace split, edge punctuation (. , ! ? ; :) stripped, lowercased.
/// Throws EmptyInput when nothing survives.
std::vector<std::string> tokenize(const std::string& raw_text);

/// Lexicon lookup with per-character spelling fallback. Throws UnknownSymbol
/// when a fallback character has no single-character inventory symbol.
std::vector<int> phonemize(const std::string& word, const Lexicon& lexicon);

Utterance build_utterance(const std::string& raw_text, const Lexicon& lexicon);

/// Splits a UTF-8 string into codepoint-sized chunks (used by the spelling
/// fallback; invalid lead bytes fall back to single bytes).
std::vector<std::string> utf8_chars(const std::string& s);

}  // namespace fgt
