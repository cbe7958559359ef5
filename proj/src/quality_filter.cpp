#include <fstream>

#include <fmt/format.h>

#include "estcorpus/clean.hpp"
#include "estcorpus/error.hpp"
#include "estcorpus/text.hpp"

namespace estcorpus {

std::string_view drop_kind_name(DropKind kind) noexcept {
  switch (kind) {
    case DropKind::NonTargetLanguage: return "NonTargetLanguage";
    case DropKind::Duplicate: return "Duplicate";
    case DropKind::TooFewWords: return "TooFewWords";
    case DropKind::TooManyStopwords: return "TooManyStopwords";
    case DropKind::TooMuchPunctuation: return "TooMuchPunctuation";
  }
  return "?";
}

void FilterThresholds::validate() const {
  auto check_ratio = [](double v, std::string_view name) {
    if (!(v >= 0.0 && v <= 1.0))
      throw Error(ErrorCode::InvalidArgument, fmt::format("{} must lie in [0,1], got {}", name, v));
  };
  if (min_words < 1) throw Error(ErrorCode::InvalidArgument, "min_words must be >= 1");
  check_ratio(max_stopword_ratio, "max_stopword_ratio");
  check_ratio(max_punct_ratio, "max_punct_ratio");
  check_ratio(lang_confidence_min, "lang_confidence_min");
}

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, fmt::format("cannot read stopword list '{}'", path.string()));
  std::unordered_set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    auto w = text::collapse_whitespace(line);
    if (!w.empty()) words.insert(text::to_lower(w));
  }
  return words;
}

FilterVerdict heuristic_filter(const Document& doc, const FilterThresholds& t) {
  const auto words = text::split_words(doc.text);
  const auto n_words = static_cast<double>(words.size());
  if (words.size() < t.min_words) return DropReason{DropKind::TooFewWords, n_words};

  std::size_t stop = 0;
  for (auto w : words) {
    // "ja," counts as the stopword "ja"
    const auto core = text::split_punct(w).core;
    if (!core.empty() && t.stopwords.count(text::to_lower(core))) ++stop;
  }
  const double stop_ratio = static_cast<double>(stop) / n_words;
  if (stop_ratio > t.max_stopword_ratio) return DropReason{DropKind::TooManyStopwords, stop_ratio};

  std::size_t punct = 0;
  std::size_t non_space = 0;
  for (auto w : words) {
    std::size_t pos = 0;
    while (pos < w.size()) {
      ++non_space;
      if (text::is_punct(text::next_code_point(w, pos))) ++punct;
    }
  }
  const double punct_ratio = static_cast<double>(punct) / static_cast<double>(non_space);
  if (punct_ratio > t.max_punct_ratio) return DropReason{DropKind::TooMuchPunctuation, punct_ratio};
  return std::nullopt;
}

FilterVerdict language_filter(const Document& doc, const LanguageProfiles& profiles, std::string_view target,
                              double min_confidence) {
  if (doc.lang_tag && !doc.lang_tag->empty() && *doc.lang_tag != target)
    return DropReason{DropKind::NonTargetLanguage, 0.0};
  double p_target = 0.0;
  try {
    const auto guess = detect_language(doc.text, profiles);
    for (const auto& [lang, p] : guess.posterior)
      if (lang == target) p_target = p;
    if (guess.lang == target && guess.probability >= min_confidence) return std::nullopt;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::TextTooShort) throw;
  }
  return DropReason{DropKind::NonTargetLanguage, p_target};
}

}  // namespace estcorpus
