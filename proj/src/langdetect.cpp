#include <algorithm>
#include <cmath>
#include <fstream>
#include <regex>
#include <sstream>

#include <fmt/format.h>

#include <nlohmann/json.hpp>
#include <unicode/uchar.h>

#include "estcorpus/clean.hpp"
#include "estcorpus/error.hpp"
#include "estcorpus/text.hpp"

namespace estcorpus {

namespace fs = std::filesystem;

namespace {

constexpr double kAlpha = 0.5;
constexpr double kBaseFreq = 10000.0;
constexpr std::size_t kMaxTextLength = 10000;

bool in_range(char32_t c, char32_t lo, char32_t hi) { return c >= lo && c <= hi; }

// Per-character folding of the language-detection library's NGram.normalize.
char32_t normalize_char(char32_t ch) {
  if (ch < 0x80) {
    const bool letter = (ch >= 'A' && ch <= 'Z') || (ch >= 'a' && ch <= 'z');
    return letter ? ch : U' ';
  }
  if (ch <= 0xFF) return (ch == 0xA0 || ch == 0xAB || ch == 0xB0 || ch == 0xBB) ? U' ' : ch;
  if (in_range(ch, 0x180, 0x24F)) {
    if (ch == 0x219) return 0x15F;
    if (ch == 0x21B) return 0x163;
    return ch;
  }
  if (in_range(ch, 0x2000, 0x206F)) return U' ';
  if (in_range(ch, 0x600, 0x6FF)) return ch == 0x6CC ? 0x64A : ch;
  if (in_range(ch, 0x1E00, 0x1EFF)) return ch >= 0x1EA0 ? 0x1EC3 : ch;
  if (in_range(ch, 0x3040, 0x309F)) return 0x3042;
  if (in_range(ch, 0x30A0, 0x30FF)) return 0x30A2;
  if (in_range(ch, 0x3100, 0x312F) || in_range(ch, 0x31A0, 0x31BF)) return 0x3105;
  if (in_range(ch, 0xAC00, 0xD7AF)) return 0xAC00;
  return ch;
}

std::u32string decode(std::string_view s) {
  std::u32string out;
  std::size_t pos = 0;
  while (pos < s.size()) out.push_back(text::next_code_point(s, pos));
  return out;
}

std::string encode(std::u32string_view s) {
  std::string out;
  for (char32_t c : s) text::append_utf8(out, c);
  return out;
}

// URL/e-mail removal, length cap, collapse of repeated spaces and the
// Latin-vs-non-Latin cleanup of the detector's preprocessing.
std::u32string prepare(std::string_view raw) {
  static const std::regex url_re(R"(https?://[-_.?&~;+=/#0-9A-Za-z]{1,2076})");
  static const std::regex mail_re(R"([-_.0-9A-Za-z]{1,64}@[-_0-9A-Za-z]{1,255}[-_.0-9A-Za-z]{1,255})");
  std::string s = std::regex_replace(std::string(raw), url_re, " ");
  s = std::regex_replace(s, mail_re, " ");

  const std::u32string chars = decode(s);
  std::u32string t;
  char32_t prev = 0;
  for (std::size_t i = 0; i < std::min(chars.size(), kMaxTextLength); ++i) {
    const char32_t ch = chars[i];
    if (ch != U' ' || prev != U' ') t.push_back(ch);
    prev = ch;
  }

  std::size_t latin = 0;
  std::size_t non_latin = 0;
  for (char32_t ch : t) {
    if (ch >= U'A' && ch <= U'z')
      ++latin;
    else if (ch >= 0x300 && !in_range(ch, 0x1E00, 0x1EFF))
      ++non_latin;
  }
  if (latin * 2 < non_latin) {
    std::u32string without;
    for (char32_t ch : t)
      if (ch < U'A' || ch > U'z') without.push_back(ch);
    t = std::move(without);
  }
  return t;
}

std::vector<std::string> extract_ngrams(std::u32string_view t, const LanguageProfiles& profiles) {
  std::vector<std::string> grams_found;
  std::u32string grams = U" ";
  bool capital_word = false;
  for (char32_t raw : t) {
    const char32_t ch = normalize_char(raw);
    const char32_t last = grams.back();
    if (last == U' ') {
      grams = U" ";
      capital_word = false;
      if (ch == U' ') continue;
    } else if (grams.size() >= 3) {
      grams.erase(0, 1);
    }
    grams.push_back(ch);
    if (u_isupper(static_cast<UChar32>(ch))) {
      if (u_isupper(static_cast<UChar32>(last))) capital_word = true;
    } else {
      capital_word = false;
    }
    if (capital_word) continue;
    for (std::size_t n = 1; n <= 3 && n <= grams.size(); ++n) {
      const auto w = std::u32string_view(grams).substr(grams.size() - n);
      if (w == U" ") continue;
      std::string key = encode(w);
      if (profiles.gram_probs(key)) grams_found.push_back(std::move(key));
    }
  }
  return grams_found;
}

}  // namespace

void LanguageProfiles::add_profile_json(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedRecord, std::string("language profile is not valid JSON: ") + e.what());
  }
  if (!j.contains("name") || !j.contains("freq") || !j.contains("n_words"))
    throw Error(ErrorCode::MalformedRecord, "language profile lacks name/freq/n_words");
  const auto name = j["name"].get<std::string>();
  if (std::find(langs_.begin(), langs_.end(), name) != langs_.end())
    throw Error(ErrorCode::InvalidArgument, fmt::format("duplicate language profile '{}'", name));
  const auto n_words = j["n_words"].get<std::vector<double>>();
  if (n_words.size() < 3) throw Error(ErrorCode::MalformedRecord, "n_words must have three entries");

  const std::size_t index = langs_.size();
  langs_.push_back(name);
  for (auto& [gram, probs] : grams_) probs.resize(langs_.size(), 0.0);
  for (const auto& [gram, freq] : j["freq"].items()) {
    const std::size_t len = text::code_point_count(gram);
    if (len < 1 || len > 3 || n_words[len - 1] <= 0) continue;
    auto& probs = grams_[gram];
    probs.resize(langs_.size(), 0.0);
    probs[index] = freq.get<double>() / n_words[len - 1];
  }
}

LanguageProfiles LanguageProfiles::load_directory(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec))
    throw Error(ErrorCode::UnreadableFile, fmt::format("language profile directory '{}' not found", dir.string()));
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  LanguageProfiles profiles;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw Error(ErrorCode::UnreadableFile, fmt::format("cannot read profile '{}'", f.string()));
    std::stringstream buf;
    buf << in.rdbuf();
    profiles.add_profile_json(buf.str());
  }
  if (profiles.empty())
    throw Error(ErrorCode::InvalidArgument, fmt::format("no language profiles in '{}'", dir.string()));
  return profiles;
}

const std::vector<double>* LanguageProfiles::gram_probs(std::string_view gram) const {
  const auto it = grams_.find(std::string(gram));
  return it == grams_.end() ? nullptr : &it->second;
}

// The library samples n-grams at random and averages several trials; here the
// whole n-gram sequence is scored once in log space, which is deterministic.
LanguageGuess detect_language(std::string_view input, const LanguageProfiles& profiles) {
  if (profiles.empty()) throw Error(ErrorCode::InvalidArgument, "no language profiles loaded");
  if (!text::has_alpha(input)) throw Error(ErrorCode::TextTooShort, "text has no alphabetic content");

  const auto grams = extract_ngrams(prepare(input), profiles);
  if (grams.empty()) throw Error(ErrorCode::TextTooShort, "text yields no known character n-grams");

  const std::size_t n = profiles.languages().size();
  std::vector<double> log_score(n, 0.0);
  const double weight = kAlpha / kBaseFreq;
  for (const auto& g : grams) {
    const auto& probs = *profiles.gram_probs(g);
    for (std::size_t l = 0; l < n; ++l) log_score[l] += std::log(weight + probs[l]);
  }
  const double top = *std::max_element(log_score.begin(), log_score.end());
  double z = 0.0;
  for (double& s : log_score) {
    s = std::exp(s - top);
    z += s;
  }

  LanguageGuess guess;
  guess.posterior.reserve(n);
  for (std::size_t l = 0; l < n; ++l) guess.posterior.emplace_back(profiles.languages()[l], log_score[l] / z);
  std::stable_sort(guess.posterior.begin(), guess.posterior.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  guess.lang = guess.posterior.front().first;
  guess.probability = guess.posterior.front().second;
  return guess;
}

}  // namespace estcorpus
