#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace deid {

// Helpers for addressing UTF-8 text by Unicode scalar value. Invalid bytes
// are treated as one scalar each so offsets stay total over arbitrary input.

// Number of scalar values in `text`.
std::size_t scalar_length(std::string_view text);

// Byte offset of the scalar at `scalar_index` (== text.size() when the index
// equals the scalar length).
std::size_t scalar_to_byte(std::string_view text, std::size_t scalar_index);

// Substring addressed in scalar offsets, [start, end).
std::string_view scalar_substr(std::string_view text, std::size_t start, std::size_t end);

// Decode the scalar starting at byte `pos`; advances `pos` past it.
std::uint32_t decode_scalar(std::string_view text, std::size_t& pos);

// Precomputed scalar<->byte table for repeated lookups into one string.
class Utf8Index {
  public:
    explicit Utf8Index(std::string_view text);

    std::size_t scalars() const { return scalars_; }
    bool ascii() const { return ascii_; }

    std::size_t byte_of(std::size_t scalar_index) const;
    std::size_t scalar_of(std::size_t byte_offset) const;

  private:
    std::size_t scalars_ = 0;
    std::size_t bytes_ = 0;
    bool ascii_ = true;
    std::vector<std::uint32_t> byte_of_scalar_;   // empty when ascii
    std::vector<std::uint32_t> scalar_of_byte_;   // empty when ascii
};

}  // namespace deid
