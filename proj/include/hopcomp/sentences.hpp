#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "hopcomp/core.hpp"

namespace hopcomp {

namespace detail {

// Abbreviations that end with '.' but do not terminate a sentence.
inline bool is_abbreviation(std::string_view token) {
    static const std::array<std::string_view, 10> abbrevs{
        "Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "St.", "U.S.", "e.g.", "i.e.", "etc."};
    for (auto a : abbrevs)
        if (token == a) return true;
    return false;
}

}  // namespace detail

// Splits on terminal punctuation (. ! ?) followed by whitespace and an
// uppercase letter or digit. A short abbreviation list guards titles
// and latinisms.
inline std::vector<std::string> sentence_split(std::string_view text) {
    std::vector<std::string> out;
    size_t start = 0;
    size_t i = 0;
    auto flush = [&](size_t end) {
        std::string s = trim(text.substr(start, end - start));
        if (!s.empty()) out.push_back(std::move(s));
        start = end;
    };
    while (i < text.size()) {
        char c = text[i];
        if (c == '.' || c == '!' || c == '?') {
            // trailing closers after the terminator stay with the sentence
            size_t end = i + 1;
            while (end < text.size() &&
                   (text[end] == '"' || text[end] == '\'' || text[end] == ')'))
                ++end;
            size_t ws = end;
            while (ws < text.size() && std::isspace(static_cast<unsigned char>(text[ws]))) ++ws;
            bool boundary = ws > end && ws < text.size() &&
                            (std::isupper(static_cast<unsigned char>(text[ws])) ||
                             std::isdigit(static_cast<unsigned char>(text[ws])));
            if (boundary && c == '.') {
                // last token before the terminator, terminator included
                size_t tb = i + 1;
                while (tb > start && !std::isspace(static_cast<unsigned char>(text[tb - 1]))) --tb;
                if (detail::is_abbreviation(text.substr(tb, i + 1 - tb))) boundary = false;
            }
            if (boundary) {
                flush(end);
                i = ws;
                continue;
            }
        }
        ++i;
    }
    flush(text.size());
    return out;
}

inline std::string first_sentence_of(std::string_view text) {
    auto sentences = sentence_split(text);
    return sentences.empty() ? std::string() : sentences.front();
}

}  // namespace hopcomp
