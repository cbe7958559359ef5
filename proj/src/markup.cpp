#include <algorithm>
#include <array>
#include <charconv>

#include "estcorpus/clean.hpp"
#include "estcorpus/text.hpp"

namespace estcorpus {

namespace {

// Tags that do not separate words ("maail<b>m</b>" stays one word).
constexpr std::array<std::string_view, 29> kInlineTags = {
    "a",   "abbr", "b",   "bdi",  "bdo", "big", "cite", "code", "data", "del",    "dfn",   "em",  "font", "i",   "ins",
    "kbd", "mark", "q",   "s",    "samp", "small", "span", "strong", "sub",  "sup", "time", "tt",  "u",    "var"};

bool is_inline_tag(std::string_view tag) {
  // tag is the full "<...>" text
  std::size_t i = 1;
  if (i < tag.size() && tag[i] == '/') ++i;
  std::size_t j = i;
  std::string name;
  while (j < tag.size() && ((tag[j] >= 'a' && tag[j] <= 'z') || (tag[j] >= 'A' && tag[j] <= 'Z') ||
                            (tag[j] >= '0' && tag[j] <= '9'))) {
    name.push_back(static_cast<char>(tag[j] | 0x20));
    ++j;
  }
  if (name.empty()) return false;
  return std::find(kInlineTags.begin(), kInlineTags.end(), name) != kInlineTags.end();
}

bool decode_numeric(std::string_view body, char32_t& out) {
  // body is what sits between "&#" and ";"
  if (body.empty()) return false;
  int base = 10;
  if (body[0] == 'x' || body[0] == 'X') {
    base = 16;
    body.remove_prefix(1);
    if (body.empty()) return false;
  }
  std::uint32_t value = 0;
  const auto [ptr, ec] = std::from_chars(body.data(), body.data() + body.size(), value, base);
  if (ec != std::errc() || ptr != body.data() + body.size()) return false;
  if (value == 0 || value > 0x10FFFF || (value >= 0xD800 && value <= 0xDFFF)) return false;
  out = value;
  return true;
}

// One round of entity decoding, tag removal and collapse of the whitespace
// that removed tags leave behind.
std::string strip_once(std::string_view input) {
  const std::string s = decode_entities(input);
  std::string out;
  out.reserve(s.size());

  std::string run_ws;
  bool run_tag = false;
  bool run_sep = false;
  auto at_line_start = [&] { return out.empty() || out.back() == '\n'; };
  auto flush = [&](bool line_end) {
    if (run_tag) {
      if (!line_end && !at_line_start() && (!run_ws.empty() || run_sep)) out.push_back(' ');
    } else {
      out += run_ws;
    }
    run_ws.clear();
    run_tag = run_sep = false;
  };

  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (c == '<') {
      const std::size_t close = s.find('>', i + 1);
      if (close != std::string::npos) {
        run_tag = true;
        if (!is_inline_tag(std::string_view(s).substr(i, close - i + 1))) run_sep = true;
        i = close + 1;
        continue;
      }
    }
    if (c == '\n') {
      flush(true);
      out.push_back('\n');
      ++i;
      continue;
    }
    std::size_t next = i;
    const char32_t cp = text::next_code_point(s, next);
    if (text::is_whitespace(cp)) {
      run_ws.append(s, i, next - i);
    } else {
      flush(false);
      out.append(s, i, next - i);
    }
    i = next;
  }
  flush(true);
  return out;
}

}  // namespace

std::string decode_entities(std::string_view text) {
  static constexpr std::pair<std::string_view, char> kNamed[] = {
      {"amp", '&'}, {"lt", '<'}, {"gt", '>'}, {"quot", '"'}, {"apos", '\''}};
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '&') {
      const std::size_t semi = text.find(';', i + 1);
      if (semi != std::string_view::npos && semi - i <= 12) {
        const auto body = text.substr(i + 1, semi - i - 1);
        bool done = false;
        if (!body.empty() && body[0] == '#') {
          char32_t cp = 0;
          if (decode_numeric(body.substr(1), cp)) {
            text::append_utf8(out, cp);
            done = true;
          }
        } else {
          for (const auto& [name, ch] : kNamed) {
            if (body == name) {
              out.push_back(ch);
              done = true;
              break;
            }
          }
        }
        if (done) {
          i = semi + 1;
          continue;
        }
      }
    }
    out.push_back(text[i++]);
  }
  return out;
}

// Iterated to a fixpoint so that entities which decode to markup, and markup
// whose removal splices an entity together, are handled too; this makes the
// function idempotent. Every changing round shrinks the text, so it terminates.
std::string strip_markup(std::string_view text) {
  std::string current(text);
  for (;;) {
    std::string next = strip_once(current);
    if (next == current) return current;
    current = std::move(next);
  }
}

}  // namespace estcorpus
