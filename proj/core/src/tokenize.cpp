#include "deid/tokenize.hpp"

#include "deid/utf8.hpp"

namespace deid {

namespace {

inline bool is_space_scalar(std::uint32_t u) {
    return u == ' ' || u == '\t' || u == '\n' || u == '\r' || u == '\f' || u == '\v' ||
           u == 0x00A0;
}

inline bool is_word_scalar(std::uint32_t u) {
    if (u >= 0x80) return !is_space_scalar(u);
    return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z');
}

}  // namespace

std::string_view bare_marker(std::string_view marker) {
    if (marker.size() > 2 && marker.front() == '[' && marker.back() == ']') {
        return marker.substr(1, marker.size() - 2);
    }
    return marker;
}

std::vector<Token> tokenize(std::string_view text, std::string_view marker) {
    std::vector<Token> tokens;
    const std::string_view bare = marker.empty() ? std::string_view{} : bare_marker(marker);
    const std::size_t marker_scalars = marker.empty() ? 0 : scalar_length(marker);

    std::size_t pos = 0;      // byte offset
    std::size_t scalar = 0;   // scalar offset
    Token word;
    bool in_word = false;

    auto flush_word = [&]() {
        if (in_word) {
            if (!bare.empty() && word.text == bare) word.marker = true;
            tokens.push_back(std::move(word));
            word = {};
            in_word = false;
        }
    };

    while (pos < text.size()) {
        if (!marker.empty() && text.compare(pos, marker.size(), marker) == 0) {
            flush_word();
            tokens.push_back(Token{scalar, scalar + marker_scalars, std::string(marker), true});
            pos += marker.size();
            scalar += marker_scalars;
            continue;
        }
        std::size_t next = pos;
        std::uint32_t u = decode_scalar(text, next);
        if (is_word_scalar(u)) {
            if (!in_word) {
                word.begin = scalar;
                in_word = true;
            }
            word.text.append(text.data() + pos, next - pos);
            word.end = scalar + 1;
        } else {
            flush_word();
            if (!is_space_scalar(u)) {
                tokens.push_back(
                    Token{scalar, scalar + 1, std::string(text.substr(pos, next - pos)), false});
            }
        }
        pos = next;
        ++scalar;
    }
    flush_word();
    return tokens;
}

}  // namespace deid
