// tokenize.hpp
//
// Caption text preprocessing: lowercase, whitespace split, strip leading
// and trailing punctuation per token. Interior punctuation (don't, u.s.a)
// survives; tokens that are all punctuation are dropped.

#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace attnbeam {

using TokenSeq = std::vector<std::string>;

namespace detail {

inline bool is_ascii_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_edge_punct(char c) {
    switch (c) {
        case '.': case ',': case '!': case '?': case ';': case ':':
        case '"': case '\'': case '(': case ')':
            return true;
        default:
            return false;
    }
}

// ASCII-only lowering; multi-byte UTF-8 sequences pass through untouched.
inline char to_lower_ascii(char c) {
    return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
}

} // namespace detail

inline TokenSeq tokenize(std::string_view text) {
    TokenSeq out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && detail::is_ascii_space(text[i])) ++i;
        std::size_t start = i;
        while (i < text.size() && !detail::is_ascii_space(text[i])) ++i;
        if (i == start) continue;

        std::size_t lo = start;
        std::size_t hi = i;
        while (lo < hi && detail::is_edge_punct(text[lo])) ++lo;
        while (hi > lo && detail::is_edge_punct(text[hi - 1])) --hi;
        if (lo == hi) continue;

        std::string token;
        token.reserve(hi - lo);
        for (std::size_t k = lo; k < hi; ++k) token.push_back(detail::to_lower_ascii(text[k]));
        out.push_back(std::move(token));
    }
    return out;
}

inline std::string detokenize(const TokenSeq& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i > 0) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

} // namespace attnbeam
