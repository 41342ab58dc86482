#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace deid {

// One token with its scalar-offset range in the source text. Tokens are
// maximal alphanumeric runs; each punctuation scalar stands alone;
// whitespace separates and is never a token.
struct Token {
    std::size_t begin = 0;  // scalar offset, inclusive
    std::size_t end = 0;    // scalar offset, exclusive
    std::string text;
    bool marker = false;
};

// Tokenize `text`. When `marker` is non-empty, occurrences of the literal
// marker (anywhere, even mid-word) and standalone word tokens equal to its
// bare form (marker minus surrounding brackets) are flagged as markers.
std::vector<Token> tokenize(std::string_view text, std::string_view marker = {});

// Bare form of a redaction marker: "[redacted]" -> "redacted".
std::string_view bare_marker(std::string_view marker);

}  // namespace deid
