#include "deid/utf8.hpp"

namespace deid {

namespace {

// Length in bytes of the UTF-8 sequence starting with `lead`. Malformed
// leads count as single-byte scalars.
inline std::size_t sequence_length(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead & 0xE0) == 0xC0) return 2;
    if ((lead & 0xF0) == 0xE0) return 3;
    if ((lead & 0xF8) == 0xF0) return 4;
    return 1;
}

inline std::size_t clamped_step(std::string_view text, std::size_t pos) {
    std::size_t len = sequence_length(static_cast<unsigned char>(text[pos]));
    if (pos + len > text.size()) len = 1;
    // Truncated continuation bytes degrade to single-byte steps.
    for (std::size_t i = 1; i < len; ++i) {
        if ((static_cast<unsigned char>(text[pos + i]) & 0xC0) != 0x80) return 1;
    }
    return len;
}

}  // namespace

std::size_t scalar_length(std::string_view text) {
    std::size_t count = 0;
    for (std::size_t pos = 0; pos < text.size(); pos += clamped_step(text, pos)) ++count;
    return count;
}

std::size_t scalar_to_byte(std::string_view text, std::size_t scalar_index) {
    std::size_t pos = 0;
    std::size_t seen = 0;
    while (pos < text.size() && seen < scalar_index) {
        pos += clamped_step(text, pos);
        ++seen;
    }
    return pos;
}

std::string_view scalar_substr(std::string_view text, std::size_t start, std::size_t end) {
    if (end < start) end = start;
    std::size_t byte_start = scalar_to_byte(text, start);
    std::size_t byte_end = byte_start;
    std::size_t seen = start;
    while (byte_end < text.size() && seen < end) {
        byte_end += clamped_step(text, byte_end);
        ++seen;
    }
    return text.substr(byte_start, byte_end - byte_start);
}

std::uint32_t decode_scalar(std::string_view text, std::size_t& pos) {
    std::size_t len = clamped_step(text, pos);
    unsigned char lead = static_cast<unsigned char>(text[pos]);
    std::uint32_t value = 0;
    switch (len) {
        case 1: value = lead; break;
        case 2: value = lead & 0x1F; break;
        case 3: value = lead & 0x0F; break;
        default: value = lead & 0x07; break;
    }
    for (std::size_t i = 1; i < len; ++i) {
        value = (value << 6) | (static_cast<unsigned char>(text[pos + i]) & 0x3F);
    }
    pos += len;
    return value;
}

Utf8Index::Utf8Index(std::string_view text) : bytes_(text.size()) {
    for (char c : text) {
        if (static_cast<unsigned char>(c) >= 0x80) {
            ascii_ = false;
            break;
        }
    }
    if (ascii_) {
        scalars_ = text.size();
        return;
    }
    byte_of_scalar_.reserve(text.size() + 1);
    scalar_of_byte_.assign(text.size() + 1, 0);
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t step = clamped_step(text, pos);
        byte_of_scalar_.push_back(static_cast<std::uint32_t>(pos));
        for (std::size_t i = 0; i < step; ++i) {
            scalar_of_byte_[pos + i] = static_cast<std::uint32_t>(scalars_);
        }
        pos += step;
        ++scalars_;
    }
    byte_of_scalar_.push_back(static_cast<std::uint32_t>(text.size()));
    scalar_of_byte_[text.size()] = static_cast<std::uint32_t>(scalars_);
}

std::size_t Utf8Index::byte_of(std::size_t scalar_index) const {
    if (ascii_) return scalar_index <= bytes_ ? scalar_index : bytes_;
    if (scalar_index >= byte_of_scalar_.size()) return bytes_;
    return byte_of_scalar_[scalar_index];
}

std::size_t Utf8Index::scalar_of(std::size_t byte_offset) const {
    if (ascii_) return byte_offset <= bytes_ ? byte_offset : bytes_;
    if (byte_offset >= scalar_of_byte_.size()) return scalars_;
    return scalar_of_byte_[byte_offset];
}

}  // namespace deid
