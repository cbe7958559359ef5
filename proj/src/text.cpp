#include "estcorpus/text.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "estcorpus/error.hpp"

namespace estcorpus::text {

char32_t next_code_point(std::string_view s, std::size_t& pos) noexcept {
  const auto byte = static_cast<unsigned char>(s[pos]);
  if (byte < 0x80) {
    ++pos;
    return byte;
  }
  int32_t i = static_cast<int32_t>(pos);
  UChar32 c = 0;
  U8_NEXT(reinterpret_cast<const uint8_t*>(s.data()), i, static_cast<int32_t>(s.size()), c);
  pos = static_cast<std::size_t>(i);
  return c < 0 ? char32_t{0xFFFD} : static_cast<char32_t>(c);
}

void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

bool is_whitespace(char32_t cp) noexcept {
  if (cp < 0x80) return cp == ' ' || (cp >= '\t' && cp <= '\r');
  return u_isUWhiteSpace(static_cast<UChar32>(cp));
}

bool is_punct(char32_t cp) noexcept { return u_ispunct(static_cast<UChar32>(cp)); }
bool is_alpha(char32_t cp) noexcept { return u_isalpha(static_cast<UChar32>(cp)); }
bool is_upper(char32_t cp) noexcept { return u_isupper(static_cast<UChar32>(cp)); }
bool is_digit(char32_t cp) noexcept { return u_isdigit(static_cast<UChar32>(cp)); }

std::size_t whitespace_run(std::string_view s, std::size_t pos) noexcept {
  std::size_t i = pos;
  while (i < s.size()) {
    std::size_t next = i;
    if (!is_whitespace(next_code_point(s, next))) break;
    i = next;
  }
  return i - pos;
}

namespace {

template <typename F>
void for_each_word(std::string_view s, F&& f) {
  std::size_t i = 0;
  while (i < s.size()) {
    i += whitespace_run(s, i);
    if (i >= s.size()) break;
    const std::size_t start = i;
    while (i < s.size()) {
      std::size_t next = i;
      if (is_whitespace(next_code_point(s, next))) break;
      i = next;
    }
    f(s.substr(start, i - start));
  }
}

icu::UnicodeString to_unicode(std::string_view s) {
  return icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

std::string to_utf8(const icu::UnicodeString& u) {
  std::string out;
  u.toUTF8String(out);
  return out;
}

}  // namespace

std::vector<std::string_view> split_words(std::string_view s) {
  std::vector<std::string_view> words;
  for_each_word(s, [&](std::string_view w) { words.push_back(w); });
  return words;
}

std::size_t count_words(std::string_view s) noexcept {
  std::size_t n = 0;
  for_each_word(s, [&](std::string_view) { ++n; });
  return n;
}

std::size_t count_sentences(std::string_view s) noexcept {
  std::size_t n = 0;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t end = s.find('\n', start);
    if (end == std::string_view::npos) end = s.size();
    const auto line = s.substr(start, end - start);
    if (whitespace_run(line, 0) != line.size()) ++n;
    start = end + 1;
  }
  return n;
}

std::string to_lower(std::string_view s) {
  bool ascii = true;
  for (char c : s) {
    if (static_cast<unsigned char>(c) >= 0x80) {
      ascii = false;
      break;
    }
  }
  if (ascii) {
    std::string out(s);
    for (char& c : out)
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
  }
  auto u = to_unicode(s);
  u.toLower(icu::Locale::getRoot());
  return to_utf8(u);
}

std::string nfkc(std::string_view s) {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* norm = icu::Normalizer2::getNFKCInstance(status);
  if (U_FAILURE(status)) throw Error(ErrorCode::Internal, "ICU NFKC normalizer unavailable");
  const auto u = to_unicode(s);
  if (norm->isNormalized(u, status) && U_SUCCESS(status)) return std::string(s);
  status = U_ZERO_ERROR;
  const auto out = norm->normalize(u, status);
  if (U_FAILURE(status)) throw Error(ErrorCode::Internal, "NFKC normalization failed");
  return to_utf8(out);
}

std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for_each_word(s, [&](std::string_view w) {
    if (!out.empty()) out.push_back(' ');
    out.append(w);
  });
  return out;
}

std::string capitalize_first(std::string_view s) {
  if (s.empty()) return {};
  std::size_t pos = 0;
  const char32_t first = next_code_point(s, pos);
  std::string out;
  append_utf8(out, static_cast<char32_t>(u_toupper(static_cast<UChar32>(first))));
  out.append(s.substr(pos));
  return out;
}

bool has_internal_capital(std::string_view word) {
  std::size_t pos = 0;
  if (word.empty()) return false;
  next_code_point(word, pos);
  while (pos < word.size()) {
    if (is_upper(next_code_point(word, pos))) return true;
  }
  return false;
}

bool has_alpha(std::string_view s) {
  std::size_t pos = 0;
  while (pos < s.size()) {
    if (is_alpha(next_code_point(s, pos))) return true;
  }
  return false;
}

TokenParts split_punct(std::string_view token) {
  std::size_t begin = 0;
  while (begin < token.size()) {
    std::size_t next = begin;
    if (!is_punct(next_code_point(token, next))) break;
    begin = next;
  }
  std::size_t end = token.size();
  while (end > begin) {
    // step back to the start of the previous code point
    std::size_t start = end - 1;
    while (start > begin && (static_cast<unsigned char>(token[start]) & 0xC0) == 0x80) --start;
    std::size_t probe = start;
    if (!is_punct(next_code_point(token, probe))) break;
    end = start;
  }
  return {token.substr(0, begin), token.substr(begin, end - begin), token.substr(end)};
}

std::size_t code_point_count(std::string_view s) noexcept {
  std::size_t n = 0;
  for (char c : s)
    if ((static_cast<unsigned char>(c) & 0xC0) != 0x80) ++n;
  return n;
}

}  // namespace estcorpus::text
