#include "fgt/textfront.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

namespace fgt {

namespace {

const std::string kEdgePunct = ".,!?;:";

bool is_space(char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string ascii_lower(std::string s) {
    for (char& c : s)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return s;
}

std::vector<std::string> split_ws(const std::string& s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(s[i])) ++i;
        std::size_t start = i;
        while (i < s.size() && !is_space(s[i])) ++i;
        if (i > start) out.push_back(s.substr(start, i - start));
    }
    return out;
}

std::string strip_edge_punct(const std::string& w) {
    std::size_t b = 0, e = w.size();
    while (b < e && kEdgePunct.find(w[b]) != std::string::npos) ++b;
    while (e > b && kEdgePunct.find(w[e - 1]) != std::string::npos) --e;
    return w.substr(b, e - b);
}

}  // namespace

std::vector<std::string> utf8_chars(const std::string& s) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < s.size()) {
        unsigned char lead = static_cast<unsigned char>(s[i]);
        std::size_t len = 1;
        if ((lead & 0xe0) == 0xc0) len = 2;
        else if ((lead & 0xf0) == 0xe0) len = 3;
        else if ((lead & 0xf8) == 0xf0) len = 4;
        if (i + len > s.size()) len = 1;
        out.push_back(s.substr(i, len));
        i += len;
    }
    return out;
}

Lexicon Lexicon::parse(const std::string& text) {
    Lexicon lex;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    bool have_inventory = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line_no == 1) {
            const std::string prefix = "#inventory:";
            if (line.rfind(prefix, 0) != 0)
                throw LexiconError("lexicon line 1: expected '#inventory: p1 p2 ...'");
            for (const std::string& sym : split_ws(line.substr(prefix.size()))) {
                if (lex.symbol_ids.count(sym))
                    throw LexiconError("lexicon line 1: duplicate inventory symbol '" + sym + "'");
                lex.symbol_ids[sym] = static_cast<int>(lex.phoneme_inventory.size());
                lex.phoneme_inventory.push_back(sym);
            }
            if (lex.phoneme_inventory.empty())
                throw LexiconError("lexicon line 1: empty inventory");
            have_inventory = true;
            continue;
        }
        if (line.empty() || line[0] == '#') continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw LexiconError("lexicon line " + std::to_string(line_no) + ": missing TAB separator");
        std::string word = ascii_lower(line.substr(0, tab));
        if (word.empty())
            throw LexiconError("lexicon line " + std::to_string(line_no) + ": empty word");
        std::vector<std::string> syms = split_ws(line.substr(tab + 1));
        if (syms.empty())
            throw LexiconError("lexicon line " + std::to_string(line_no) + ": entry '" + word +
                               "' has no phonemes");
        std::vector<int> ids;
        ids.reserve(syms.size());
        for (const std::string& sym : syms) {
            auto it = lex.symbol_ids.find(sym);
            if (it == lex.symbol_ids.end())
                throw LexiconError("lexicon line " + std::to_string(line_no) + ": symbol '" + sym +
                                   "' not in inventory");
            ids.push_back(it->second);
        }
        if (!lex.entries.emplace(word, std::move(ids)).second)
            throw LexiconError("lexicon line " + std::to_string(line_no) + ": duplicate entry '" +
                               word + "'");
    }
    if (!have_inventory) throw LexiconError("lexicon: empty file, expected '#inventory:' line");
    return lex;
}

Lexicon Lexicon::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LexiconError("cannot open lexicon '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

int Lexicon::id_of(const std::string& symbol) const {
    auto it = symbol_ids.find(symbol);
    return it == symbol_ids.end() ? -1 : it->second;
}

std::vector<std::string> tokenize(const std::string& raw_text) {
    std::vector<std::string> words;
    for (const std::string& tok : split_ws(raw_text)) {
        std::string w = ascii_lower(strip_edge_punct(tok));
        if (!w.empty()) words.push_back(std::move(w));
    }
    if (words.empty()) throw EmptyInput("no words survive tokenization");
    return words;
}

std::vector<int> phonemize(const std::string& word, const Lexicon& lexicon) {
    auto it = lexicon.entries.find(word);
    if (it != lexicon.entries.end()) return it->second;
    // Spelling fallback: each character must be a single-character inventory symbol.
    std::vector<int> ids;
    for (const std::string& ch : utf8_chars(word)) {
        int id = lexicon.id_of(ch);
        if (id < 0)
            throw UnknownSymbol("word '" + word + "': character '" + ch +
                                "' has no inventory symbol");
        ids.push_back(id);
    }
    return ids;
}

Utterance build_utterance(const std::string& raw_text, const Lexicon& lexicon) {
    Utterance utt;
    utt.words = tokenize(raw_text);
    for (const std::string& word : utt.words) {
        std::vector<int> ids = phonemize(word, lexicon);
        Span span{utt.phoneme_ids.size(), utt.phoneme_ids.size() + ids.size()};
        utt.phoneme_ids.insert(utt.phoneme_ids.end(), ids.begin(), ids.end());
        utt.spans.push_back(span);
    }
    return utt;
}

}  // namespace fgt
