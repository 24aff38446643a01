#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace symfuse {

/// Tokenization substrate for the symbolic extractors. Sentences split on
/// [.!?] runs followed by whitespace or end of text; word tokens are maximal
/// runs of alphanumerics/apostrophes (bytes >= 0x80 are treated as letters so
/// UTF-8 words stay intact); emoticons and punctuation are kept out of the
/// word stream.
struct TokenizedText {
    std::vector<std::vector<std::string>> sentences;
    std::vector<std::string> tokens; // flattened word tokens
    std::vector<std::string> punct;
    std::vector<std::string> emoticons;
    std::vector<int> token_letter_counts;

    long letters = 0;    // alphabetic characters inside word tokens
    long characters = 0; // letters + digits inside word tokens
    long words = 0;
    long sentence_count = 0;

    long commas = 0;
    long colons = 0;
    long double_quotes = 0;
    long exclamations = 0;
    long capital_first_sentences = 0;
};

namespace detail {

inline bool is_ascii_alpha(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}
inline bool is_ascii_digit(unsigned char c) { return c >= '0' && c <= '9'; }
inline bool is_letter_byte(unsigned char c) { return is_ascii_alpha(c) || c >= 0x80; }
inline bool is_word_byte(unsigned char c) {
    return is_ascii_alpha(c) || is_ascii_digit(c) || c >= 0x80 || c == '\'';
}
inline bool is_space_byte(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

/// Emoticon inventory, longest first. Only matched after whitespace or at the
/// start of text, which keeps URLs like http:// out.
inline const std::vector<std::string>& emoticon_patterns() {
    static const std::vector<std::string> pats = {
        ":'-(", ":'-)", ":-))", ":-)", ":-(", ":-D", ":-P", ":-p", ":-/", ":-|",
        ";-)",  ":')",  ":'(", ":))", ":((", ":)",  ":(",  ":D",  ":P",  ":p",
        ":/",   ":|",   ";)",  ";(",  ":o",  ":O",  "<3",  "xD",  "XD",  "=)",
        "=(",   "=D"};
    return pats;
}

} // namespace detail

inline TokenizedText tokenize(const std::string& text) {
    using namespace detail;
    TokenizedText out;
    const size_t n = text.size();

    // mark emoticon spans first so their punctuation stays out of the counts
    std::vector<bool> emo(n, false);
    for (size_t i = 0; i < n;) {
        const bool at_boundary = (i == 0) || is_space_byte(static_cast<unsigned char>(text[i - 1]));
        if (at_boundary) {
            size_t matched = 0;
            for (const auto& p : emoticon_patterns()) {
                if (p.size() <= n - i && text.compare(i, p.size(), p) == 0) {
                    matched = p.size();
                    out.emoticons.push_back(p);
                    break;
                }
            }
            if (matched) {
                for (size_t k = 0; k < matched; ++k) emo[i + k] = true;
                i += matched;
                continue;
            }
        }
        ++i;
    }

    std::vector<std::string> sentence;

    auto flush_word = [&](std::string& w) {
        // strip apostrophes that do not sit between word characters
        while (!w.empty() && w.front() == '\'') w.erase(w.begin());
        while (!w.empty() && w.back() == '\'') w.pop_back();
        if (w.empty()) return;
        int letters = 0, chars = 0;
        for (unsigned char c : w) {
            if (is_letter_byte(c)) ++letters;
            if (is_letter_byte(c) || is_ascii_digit(c)) ++chars;
        }
        out.letters += letters;
        out.characters += chars;
        out.token_letter_counts.push_back(letters);
        out.tokens.push_back(w);
        sentence.push_back(w);
        w.clear();
    };
    auto flush_sentence = [&]() {
        if (sentence.empty()) return;
        const unsigned char first = static_cast<unsigned char>(sentence.front()[0]);
        if (first >= 'A' && first <= 'Z') ++out.capital_first_sentences;
        out.sentences.push_back(std::move(sentence));
        sentence.clear();
    };

    std::string word;
    for (size_t i = 0; i < n; ++i) {
        if (emo[i]) {
            flush_word(word);
            continue;
        }
        const unsigned char c = static_cast<unsigned char>(text[i]);
        if (is_word_byte(c)) {
            word.push_back(static_cast<char>(c));
            continue;
        }
        flush_word(word);
        if (is_space_byte(c)) continue;
        out.punct.push_back(std::string(1, static_cast<char>(c)));
        switch (c) {
            case ',': ++out.commas; break;
            case ':': ++out.colons; break;
            case '"': ++out.double_quotes; break;
            case '!': ++out.exclamations; break;
            default: break;
        }
        if (c == '.' || c == '!' || c == '?') {
            const bool at_end = i + 1 >= n;
            if (at_end || is_space_byte(static_cast<unsigned char>(text[i + 1]))) flush_sentence();
        }
    }
    flush_word(word);
    flush_sentence();

    out.words = static_cast<long>(out.tokens.size());
    out.sentence_count = static_cast<long>(out.sentences.size());
    return out;
}

} // namespace symfuse
