#pragma once

// UTF-8 helpers shared by every stage. Whitespace is the Unicode White_Space
// property and punctuation is general category P*, both answered by ICU.

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace estcorpus::text {

// Decodes the code point starting at `pos` and advances `pos` past it.
// Ill-formed sequences decode to U+FFFD and consume one byte.
char32_t next_code_point(std::string_view s, std::size_t& pos) noexcept;
void append_utf8(std::string& out, char32_t cp);

bool is_whitespace(char32_t cp) noexcept;
bool is_punct(char32_t cp) noexcept;
bool is_alpha(char32_t cp) noexcept;
bool is_upper(char32_t cp) noexcept;
bool is_digit(char32_t cp) noexcept;

// Length in bytes of the whitespace run at `pos` (0 when none).
std::size_t whitespace_run(std::string_view s, std::size_t pos) noexcept;

std::vector<std::string_view> split_words(std::string_view s);
std::size_t count_words(std::string_view s) noexcept;

// Non-empty lines after trimming whitespace.
std::size_t count_sentences(std::string_view s) noexcept;

std::string to_lower(std::string_view s);
std::string nfkc(std::string_view s);

// Runs of whitespace become one ASCII space; leading/trailing runs vanish.
std::string collapse_whitespace(std::string_view s);

// Upper-cases the first code point, leaves the rest as given.
std::string capitalize_first(std::string_view s);

// True when some code point after the first one is upper case ("IBM", "McDonald").
bool has_internal_capital(std::string_view word);

bool has_alpha(std::string_view s);

// Splits a token into leading punctuation, core, trailing punctuation.
struct TokenParts {
  std::string_view lead;
  std::string_view core;
  std::string_view trail;
};
TokenParts split_punct(std::string_view token);

std::size_t code_point_count(std::string_view s) noexcept;

}  // namespace estcorpus::text
