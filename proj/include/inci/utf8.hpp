#ifndef INCI_UTF8_HPP
#define INCI_UTF8_HPP

#include <cstddef>
#include <string>
#include <string_view>

// Character offsets throughout the corpus are Unicode scalar-value offsets.
// Text is held as UTF-8; these helpers translate between the two.
namespace inci::utf8 {

/// Number of scalar values in a UTF-8 string. Throws std::invalid_argument on
/// malformed input.
std::size_t length(std::string_view text);

/// Byte offset of the scalar value at `char_offset`. `char_offset == length`
/// maps to text.size(). Throws std::out_of_range past the end.
std::size_t byte_offset(std::string_view text, std::size_t char_offset);

/// Substring by scalar-value offsets [begin, end).
std::string slice(std::string_view text, std::size_t begin, std::size_t end);

bool is_valid(std::string_view text);

}  // namespace inci::utf8

#endif  // INCI_UTF8_HPP
