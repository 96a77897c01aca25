#pragma once

// Description text to bag-of-words: segmentation, stop-word removal, noun
// filtering against a lexicon, document-frequency pruning and id encoding.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "crowdtopic/error.hpp"
#include "crowdtopic/lexicon_data.hpp"

namespace crowdtopic::textprep {

using TermSet = std::unordered_set<std::string>;

namespace utf8 {

inline void append(std::string& out, char32_t cp) {
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

/// Decodes one code point starting at `pos` and advances it. Malformed or
/// overlong sequences decode to U+FFFD, consuming one byte.
inline char32_t next(std::string_view s, std::size_t& pos) {
    const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
    const unsigned char b0 = byte(pos);
    if (b0 < 0x80) {
        ++pos;
        return b0;
    }
    std::size_t len = 0;
    char32_t cp = 0;
    char32_t min = 0;
    if ((b0 & 0xE0) == 0xC0) {
        len = 2, cp = b0 & 0x1F, min = 0x80;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3, cp = b0 & 0x0F, min = 0x800;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4, cp = b0 & 0x07, min = 0x10000;
    } else {
        ++pos;
        return 0xFFFD;
    }
    if (pos + len > s.size()) {
        ++pos;
        return 0xFFFD;
    }
    for (std::size_t i = 1; i < len; ++i) {
        const unsigned char b = byte(pos + i);
        if ((b & 0xC0) != 0x80) {
            ++pos;
            return 0xFFFD;
        }
        cp = (cp << 6) | (b & 0x3F);
    }
    if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
        ++pos;
        return 0xFFFD;
    }
    pos += len;
    return cp;
}

} // namespace utf8

/// Word characters: ASCII letters and digits, plus every non-ASCII code point
/// outside the punctuation, symbol, space, control and emoji blocks.
inline bool is_word_char(char32_t cp) {
    if (cp < 0x80) return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
    if (cp < 0xC0) return cp == 0xAA || cp == 0xB5 || cp == 0xBA;
    if (cp == 0xD7 || cp == 0xF7) return false;
    if (cp >= 0x2000 && cp <= 0x2BFF) return false; // punctuation, currency, arrows, math, dingbats
    if (cp >= 0x3000 && cp <= 0x303F) return false; // CJK punctuation
    if (cp >= 0xD800 && cp <= 0xF8FF) return false; // surrogates, private use
    if (cp >= 0xFE00 && cp <= 0xFE0F) return false; // variation selectors
    if (cp >= 0xFE30 && cp <= 0xFE6F) return false;
    if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
    if (cp >= 0xFF1A && cp <= 0xFF20) return false;
    if (cp >= 0xFF3B && cp <= 0xFF40) return false;
    if (cp >= 0xFF5B && cp <= 0xFF65) return false;
    if (cp >= 0xFFF0 && cp <= 0xFFFF) return false;
    if (cp >= 0x1F000 && cp <= 0x1FAFF) return false; // emoji and pictographs
    if (cp >= 0xE0000) return false;
    return true;
}

inline bool is_ascii_digit(char32_t cp) { return cp >= '0' && cp <= '9'; }

/// Simple case folding for ASCII, Latin-1, Latin Extended-A, Greek and Cyrillic.
inline char32_t to_lower(char32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 32;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 32;
    if (cp == 0x178) return 0xFF;
    if (cp >= 0x100 && cp <= 0x17F && cp != 0x130 && cp != 0x131 && cp != 0x138 && cp != 0x149 && cp != 0x17F) {
        const bool odd_upper = (cp >= 0x139 && cp <= 0x148) || (cp >= 0x179 && cp <= 0x17E);
        if (odd_upper) return (cp % 2 == 1) ? cp + 1 : cp;
        return (cp % 2 == 0) ? cp + 1 : cp;
    }
    if (cp >= 0x391 && cp <= 0x3AB && cp != 0x3A2) return cp + 32;
    if (cp >= 0x410 && cp <= 0x42F) return cp + 32;
    if (cp >= 0x400 && cp <= 0x40F) return cp + 80;
    return cp;
}

/// Splits on non-word characters and lowercases. Tokens shorter than two code
/// points and tokens made only of ASCII digits are dropped; mixed tokens such
/// as "80g" are kept.
inline std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    std::size_t length = 0;
    bool all_digits = true;
    auto flush = [&] {
        if (length >= 2 && !all_digits) tokens.push_back(current);
        current.clear();
        length = 0;
        all_digits = true;
    };
    std::size_t pos = 0;
    while (pos < text.size()) {
        const char32_t cp = utf8::next(text, pos);
        if (!is_word_char(cp)) {
            flush();
            continue;
        }
        utf8::append(current, to_lower(cp));
        ++length;
        all_digits = all_digits && is_ascii_digit(cp);
    }
    flush();
    return tokens;
}

/// Stop words plus an optional noun lexicon. Without a lexicon the filter is
/// pass-through apart from stop-word removal.
struct LexiconConfig {
    TermSet stopwords;
    std::optional<TermSet> noun_lexicon;
    std::size_t min_df = 2;
    double max_df_ratio = 0.95;

    void validate() const {
        if (min_df < 1) throw ArgumentError("min_df must be ≥ 1");
        if (!(max_df_ratio > 0.0 && max_df_ratio <= 1.0)) throw ArgumentError("max_df_ratio must lie in (0, 1]");
        if (noun_lexicon) {
            for (const auto& s : stopwords) {
                if (noun_lexicon->contains(s)) throw ArgumentError("term '" + s + "' is both a stop word and a noun");
            }
        }
    }
};

template <std::size_t N>
TermSet make_term_set(const std::string_view (&terms)[N]) {
    TermSet out;
    for (auto t : terms) out.emplace(t);
    return out;
}

inline TermSet default_stopwords() { return make_term_set(kDefaultStopwords); }
inline TermSet default_noun_lexicon() { return make_term_set(kDefaultNounLexicon); }

/// Default stop words with the built-in noun lexicon.
inline LexiconConfig default_lexicon_config() {
    LexiconConfig cfg;
    cfg.stopwords = default_stopwords();
    cfg.noun_lexicon = default_noun_lexicon();
    return cfg;
}

/// Reads a term list: UTF-8, one term per line, '#' starts a comment line.
/// Terms are trimmed and lowercased through the tokenizer's case folding.
inline TermSet load_term_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open term list '" + path.string() + "'");
    TermSet terms;
    std::string line;
    while (std::getline(in, line)) {
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos || line[first] == '#') continue;
        const auto last = line.find_last_not_of(" \t\r");
        std::string term;
        std::string_view raw(line.data() + first, last - first + 1);
        std::size_t pos = 0;
        while (pos < raw.size()) utf8::append(term, to_lower(utf8::next(raw, pos)));
        terms.insert(std::move(term));
    }
    return terms;
}

inline std::vector<std::string> filter_tokens(const std::vector<std::string>& tokens, const LexiconConfig& cfg) {
    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (const auto& t : tokens) {
        if (cfg.stopwords.contains(t)) continue;
        if (cfg.noun_lexicon && !cfg.noun_lexicon->contains(t)) continue;
        out.push_back(t);
    }
    return out;
}

/// Dense term index. Ids are positions in `terms()`.
class Vocabulary {
public:
    Vocabulary() = default;

    explicit Vocabulary(std::vector<std::string> terms) : terms_(std::move(terms)) {
        index_.reserve(terms_.size());
        for (std::uint32_t i = 0; i < terms_.size(); ++i) {
            if (!index_.emplace(terms_[i], i).second) throw ArgumentError("duplicate vocabulary term '" + terms_[i] + "'");
        }
    }

    [[nodiscard]] std::size_t size() const { return terms_.size(); }
    [[nodiscard]] bool empty() const { return terms_.empty(); }
    [[nodiscard]] const std::vector<std::string>& terms() const { return terms_; }
    [[nodiscard]] const std::string& term(std::uint32_t id) const { return terms_.at(id); }

    [[nodiscard]] std::optional<std::uint32_t> id_of(const std::string& term) const {
        auto it = index_.find(term);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    /// FNV-1a 64 over every term followed by '\n', as 16 hex digits.
    [[nodiscard]] std::string fingerprint() const {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        auto mix = [&](unsigned char c) {
            h ^= c;
            h *= 0x100000001B3ULL;
        };
        for (const auto& t : terms_) {
            for (unsigned char c : t) mix(c);
            mix('\n');
        }
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
        return buf;
    }

    friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.terms_ == b.terms_; }

private:
    std::vector<std::string> terms_;
    std::unordered_map<std::string, std::uint32_t> index_;
};

/// Keeps terms whose document frequency is at least min_df and at most
/// max_df_ratio of the documents. Order: descending df, then lexicographic.
inline Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& docs, const LexiconConfig& cfg) {
    if (docs.empty()) throw ArgumentError("build_vocabulary needs at least one document");
    cfg.validate();
    std::map<std::string, std::size_t> df;
    for (const auto& doc : docs) {
        std::set<std::string_view> distinct(doc.begin(), doc.end());
        for (auto t : distinct) ++df[std::string(t)];
    }
    const double n_docs = static_cast<double>(docs.size());
    std::vector<std::pair<std::size_t, std::string>> kept;
    for (auto& [term, count] : df) {
        if (count >= cfg.min_df && static_cast<double>(count) / n_docs <= cfg.max_df_ratio) kept.emplace_back(count, term);
    }
    if (kept.empty()) throw ValidationError("vocabulary is empty after document-frequency pruning");
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<std::string> terms;
    terms.reserve(kept.size());
    for (auto& [count, term] : kept) terms.push_back(std::move(term));
    return Vocabulary(std::move(terms));
}

enum class Channel { campaign_text, incentive_text };

inline std::string_view channel_name(Channel c) {
    return c == Channel::campaign_text ? "campaign_text" : "incentive_text";
}

struct TokenizedDoc {
    std::vector<std::uint32_t> token_ids;
    std::string source_id;
    Channel channel = Channel::campaign_text;

    [[nodiscard]] std::size_t size() const { return token_ids.size(); }
    friend bool operator==(const TokenizedDoc&, const TokenizedDoc&) = default;
};

/// Maps in-vocabulary words to ids; out-of-vocabulary words are dropped.
inline TokenizedDoc encode(const std::vector<std::string>& doc, const Vocabulary& vocab, std::string source_id = {},
                           Channel channel = Channel::campaign_text) {
    if (vocab.empty()) throw ArgumentError("encode needs a non-empty vocabulary");
    TokenizedDoc out{{}, std::move(source_id), channel};
    out.token_ids.reserve(doc.size());
    for (const auto& w : doc) {
        if (auto id = vocab.id_of(w)) out.token_ids.push_back(*id);
    }
    return out;
}

inline std::vector<std::string> decode(const TokenizedDoc& doc, const Vocabulary& vocab) {
    std::vector<std::string> out;
    out.reserve(doc.size());
    for (auto id : doc.token_ids) out.push_back(vocab.term(id));
    return out;
}

/// tokenize followed by filter_tokens.
inline std::vector<std::string> preprocess(std::string_view text, const LexiconConfig& cfg) {
    return filter_tokens(tokenize(text), cfg);
}

inline void save_vocabulary(const std::filesystem::path& path, const Vocabulary& vocab) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write '" + path.string() + "'");
    for (const auto& t : vocab.terms()) out << t << '\n';
}

/// One term per line, in id order; no comments.
inline Vocabulary load_vocabulary(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open vocabulary '" + path.string() + "'");
    std::vector<std::string> terms;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) terms.push_back(line);
    }
    return Vocabulary(std::move(terms));
}

} // namespace crowdtopic::textprep
