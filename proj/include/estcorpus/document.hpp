#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace estcorpus {

// One corpus unit. Sentences are the newline-separated lines of `text`;
// `lemmas`, when present, align 1:1 with the whitespace tokens of `text`.
struct Document {
  std::string id;
  std::string text;
  std::optional<std::string> lang_tag;
  std::optional<std::vector<std::string>> lemmas;
  // Extra attributes carried by vert-xml <doc> elements, in source order.
  std::vector<std::pair<std::string, std::string>> metadata;

  // Identity used by the format round-trip contract (metadata excluded).
  bool same_content(const Document& other) const {
    return id == other.id && text == other.text && lang_tag == other.lang_tag && lemmas == other.lemmas;
  }
};

struct CorpusStats {
  std::uint64_t documents = 0;
  std::uint64_t sentences = 0;
  std::uint64_t words = 0;

  CorpusStats& operator+=(const CorpusStats& o) {
    documents += o.documents;
    sentences += o.sentences;
    words += o.words;
    return *this;
  }
  friend CorpusStats operator+(CorpusStats a, const CorpusStats& b) { return a += b; }
  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;

  // Componentwise <=, the monotonicity relation between pipeline stages.
  bool dominated_by(const CorpusStats& o) const {
    return documents <= o.documents && sentences <= o.sentences && words <= o.words;
  }
};

CorpusStats document_stats(const Document& doc);

template <typename Range>
CorpusStats compute_stats(const Range& docs) {
  CorpusStats total;
  for (const Document& d : docs) total += document_stats(d);
  return total;
}

}  // namespace estcorpus
