#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace taskforge::text {

// Byte offset of the first invalid UTF-8 sequence, or nullopt if `s` is valid.
// Overlong encodings, surrogates and code points above U+10FFFF are invalid.
std::optional<std::size_t> find_invalid_utf8(std::string_view s);

// Length in bytes of the Unicode White_Space code point starting at `pos`,
// or 0 if there is none.
std::size_t whitespace_at(std::string_view s, std::size_t pos);

// Trim both ends and collapse every internal whitespace run to one ASCII space.
std::string collapse_whitespace(std::string_view s);

// Trim ASCII whitespace (space, \t, \r, \n, \v, \f) from both ends.
std::string_view trim(std::string_view s);

std::vector<std::string_view> split_words(std::string_view s);
std::size_t count_words(std::string_view s);

// Splits on '\n' and drops one trailing '\r' from each line. A trailing
// newline does not produce an extra empty line.
std::vector<std::string_view> split_lines(std::string_view s);

std::string to_lower_ascii(std::string_view s);
bool iequals_ascii(std::string_view a, std::string_view b);
bool istarts_with_ascii(std::string_view s, std::string_view prefix);

std::string join(const std::vector<std::string>& parts, std::string_view sep);

}  // namespace taskforge::text
