#include <fstream>

#include <fmt/format.h>

#include "estcorpus/clean.hpp"
#include "estcorpus/error.hpp"
#include "estcorpus/text.hpp"

namespace estcorpus {

void CasingLexicon::add_evidence(std::string_view lower, bool capitalized, std::uint64_t n) {
  auto it = votes_.find(lower);
  if (it == votes_.end()) it = votes_.emplace(std::string(lower), Votes{}).first;
  (capitalized ? it->second.capitalized : it->second.lower) += n;
}

void CasingLexicon::set(std::string lower, std::string surface, std::uint64_t count) {
  if (text::to_lower(surface) != lower)
    throw Error(ErrorCode::MalformedRecord,
                fmt::format("casing lexicon entry '{}' -> '{}': key is not the lowercase of the surface", lower, surface));
  Votes v;
  v.fixed_surface = std::move(surface);
  v.capitalized = count;
  votes_.insert_or_assign(std::move(lower), std::move(v));
}

std::optional<CasingLexicon::Entry> CasingLexicon::lookup(std::string_view lower) const {
  const auto it = votes_.find(lower);
  if (it == votes_.end()) return std::nullopt;
  const Votes& v = it->second;
  if (v.fixed_surface) return Entry{*v.fixed_surface, v.capitalized};
  if (v.capitalized > v.lower) return Entry{text::capitalize_first(it->first), v.capitalized};
  return Entry{it->first, v.lower};
}

std::vector<std::pair<std::string, CasingLexicon::Entry>> CasingLexicon::entries() const {
  std::vector<std::pair<std::string, Entry>> out;
  out.reserve(votes_.size());
  for (const auto& [key, v] : votes_) out.emplace_back(key, *lookup(key));
  return out;
}

void CasingLexicon::save_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write casing lexicon '{}'", path.string()));
  for (const auto& [key, e] : entries()) out << key << '\t' << e.surface << '\t' << e.count << '\n';
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, fmt::format("write failed on '{}'", path.string()));
}

CasingLexicon CasingLexicon::load_tsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, fmt::format("cannot read casing lexicon '{}'", path.string()));
  CasingLexicon lex;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = t1 == std::string::npos ? t1 : line.find('\t', t1 + 1);
    if (t2 == std::string::npos) throw MalformedRecordError(line_no, "expected lowercase<TAB>surface<TAB>count");
    std::uint64_t count = 0;
    try {
      count = std::stoull(line.substr(t2 + 1));
    } catch (const std::exception&) {
      throw MalformedRecordError(line_no, "count is not a non-negative integer");
    }
    try {
      lex.set(line.substr(0, t1), line.substr(t1 + 1, t2 - t1 - 1), count);
    } catch (const Error& e) {
      throw MalformedRecordError(line_no, e.what());
    }
  }
  return lex;
}

void add_casing_evidence(CasingLexicon& lexicon, const Document& doc) {
  if (!doc.lemmas) throw Error(ErrorCode::MissingLemmas, fmt::format("document '{}' has no lemma annotation", doc.id));
  const auto words = text::split_words(doc.text);
  if (words.size() != doc.lemmas->size())
    throw Error(ErrorCode::MissingLemmas,
                fmt::format("document '{}': {} lemmas for {} tokens", doc.id, doc.lemmas->size(), words.size()));
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto core = text::split_punct(words[i]).core;
    if (core.empty() || !text::has_alpha(core) || text::has_internal_capital(core)) continue;
    const auto lemma = text::split_punct((*doc.lemmas)[i]).core;
    if (lemma.empty()) continue;
    std::size_t pos = 0;
    const bool capitalized = text::is_upper(text::next_code_point(lemma, pos));
    const auto lower = text::to_lower(core);
    if (capitalized && text::to_lower(text::capitalize_first(lower)) != lower) continue;
    lexicon.add_evidence(lower, capitalized);
  }
}

CasingLexicon build_casing_lexicon(const std::vector<Document>& docs) {
  CasingLexicon lex;
  for (const auto& d : docs) add_casing_evidence(lex, d);
  return lex;
}

std::string truecase_text(std::string_view input, const CasingLexicon& lexicon) {
  if (lexicon.empty()) return std::string(input);
  std::string out;
  out.reserve(input.size());
  std::size_t i = 0;
  while (i < input.size()) {
    const std::size_t ws = text::whitespace_run(input, i);
    out.append(input.substr(i, ws));
    i += ws;
    if (i >= input.size()) break;
    std::size_t end = i;
    while (end < input.size()) {
      std::size_t next = end;
      if (text::is_whitespace(text::next_code_point(input, next))) break;
      end = next;
    }
    const auto token = input.substr(i, end - i);
    const auto parts = text::split_punct(token);
    std::optional<CasingLexicon::Entry> hit;
    if (!parts.core.empty() && !text::has_internal_capital(parts.core))
      hit = lexicon.lookup(text::to_lower(parts.core));
    if (hit) {
      out.append(parts.lead);
      out.append(hit->surface);
      out.append(parts.trail);
    } else {
      out.append(token);
    }
    i = end;
  }
  return out;
}

Document truecase(Document doc, const CasingLexicon& lexicon) {
  doc.text = truecase_text(doc.text, lexicon);
  return doc;
}

}  // namespace estcorpus
