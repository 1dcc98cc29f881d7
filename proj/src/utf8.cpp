#include "inci/utf8.hpp"

#include <stdexcept>

namespace inci::utf8 {

namespace {

// Width of the sequence starting at text[pos], or 0 when malformed.
std::size_t sequence_width(std::string_view text, std::size_t pos) {
  const auto lead = static_cast<unsigned char>(text[pos]);
  std::size_t width = 0;
  if (lead < 0x80) return 1;
  if ((lead & 0xE0) == 0xC0 && lead >= 0xC2) width = 2;
  else if ((lead & 0xF0) == 0xE0) width = 3;
  else if ((lead & 0xF8) == 0xF0 && lead <= 0xF4) width = 4;
  else return 0;
  if (pos + width > text.size()) return 0;
  for (std::size_t k = 1; k < width; ++k) {
    if ((static_cast<unsigned char>(text[pos + k]) & 0xC0) != 0x80) return 0;
  }
  return width;
}

}  // namespace

std::size_t length(std::string_view text) {
  std::size_t count = 0;
  for (std::size_t pos = 0; pos < text.size(); ++count) {
    const auto width = sequence_width(text, pos);
    if (width == 0) throw std::invalid_argument("malformed UTF-8 at byte " + std::to_string(pos));
    pos += width;
  }
  return count;
}

std::size_t byte_offset(std::string_view text, std::size_t char_offset) {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < char_offset; ++i) {
    if (pos >= text.size()) throw std::out_of_range("character offset past end of text");
    const auto width = sequence_width(text, pos);
    if (width == 0) throw std::invalid_argument("malformed UTF-8 at byte " + std::to_string(pos));
    pos += width;
  }
  return pos;
}

std::string slice(std::string_view text, std::size_t begin, std::size_t end) {
  if (end < begin) throw std::out_of_range("slice end before begin");
  const auto b = byte_offset(text, begin);
  const auto e = b + byte_offset(text.substr(b), end - begin);
  return std::string(text.substr(b, e - b));
}

bool is_valid(std::string_view text) {
  for (std::size_t pos = 0; pos < text.size();) {
    const auto width = sequence_width(text, pos);
    if (width == 0) return false;
    pos += width;
  }
  return true;
}

}  // namespace inci::utf8
