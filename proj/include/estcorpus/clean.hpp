#pragma once

// Corpus cleaning stages: markup stripping, language filtering, exact
// deduplication, heuristic quality filtering and lemma-driven truecasing.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

#include "estcorpus/document.hpp"
#include "estcorpus/hash.hpp"

namespace estcorpus {

enum class DropKind { NonTargetLanguage, Duplicate, TooFewWords, TooManyStopwords, TooMuchPunctuation };

std::string_view drop_kind_name(DropKind kind) noexcept;

// Why a document was removed. `detail` is the measured value that triggered
// the drop: target-language posterior, word count, or the offending ratio.
// Duplicates carry 0.
struct DropReason {
  DropKind kind;
  double detail = 0.0;

  friend bool operator==(const DropReason&, const DropReason&) = default;
};

// --- markup ---------------------------------------------------------------

std::string strip_markup(std::string_view text);

// Decodes &amp; &lt; &gt; &quot; &apos; and numeric (&#NN; &#xHH;) entities once.
std::string decode_entities(std::string_view text);

// --- language identification ----------------------------------------------

// Character 1-3 gram profiles in the JSON layout of the language-detection
// library ({"name": .., "freq": {gram: count}, "n_words": [n1, n2, n3]}).
class LanguageProfiles {
 public:
  static LanguageProfiles load_directory(const std::filesystem::path& dir);
  void add_profile_json(std::string_view json_text);

  const std::vector<std::string>& languages() const noexcept { return langs_; }
  bool empty() const noexcept { return langs_.empty(); }

  // Per-language P(gram | lang), or nullptr for an unseen gram.
  const std::vector<double>* gram_probs(std::string_view gram) const;

 private:
  std::vector<std::string> langs_;
  std::unordered_map<std::string, std::vector<double>> grams_;
};

struct LanguageGuess {
  std::string lang;
  double probability = 0.0;
  std::vector<std::pair<std::string, double>> posterior;  // sorted, descending
};

// Maximum-posterior language under a naive Bayes model over the n-grams the
// detector's normalization extracts. Throws TextTooShort without alphabetic content.
LanguageGuess detect_language(std::string_view text, const LanguageProfiles& profiles);

// --- deduplication ----------------------------------------------------------

// Lowercased, whitespace-collapsed form that dedup_key hashes.
std::string dedup_normal_form(std::string_view text);
Digest128 dedup_key(std::string_view text);

// Insert-if-absent set of digests; the single serialization point of dedup.
class Deduplicator {
 public:
  // True when the text is new (keep), false for a repeat (drop).
  bool insert(std::string_view text) { return seen_.insert(dedup_key(text)).second; }
  bool insert(const Digest128& key) { return seen_.insert(key).second; }
  std::size_t size() const noexcept { return seen_.size(); }

 private:
  std::unordered_set<Digest128, Digest128Hash> seen_;
};

struct DedupResult {
  std::vector<Document> kept;
  std::uint64_t dropped = 0;
  std::vector<std::string> dropped_ids;
};

DedupResult dedup(std::vector<Document> docs);

// --- heuristic quality filter -------------------------------------------------

struct FilterThresholds {
  std::uint64_t min_words = 10;
  double max_stopword_ratio = 0.6;
  double max_punct_ratio = 0.3;
  double lang_confidence_min = 0.95;
  std::unordered_set<std::string> stopwords;

  // Throws InvalidArgument when a ratio leaves [0,1] or min_words < 1.
  void validate() const;
};

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path);

using FilterVerdict = std::optional<DropReason>;  // nullopt = keep

FilterVerdict heuristic_filter(const Document& doc, const FilterThresholds& thresholds);

// Tag first (a present tag must equal the target), then the detector must
// name the target with probability >= min_confidence.
FilterVerdict language_filter(const Document& doc, const LanguageProfiles& profiles, std::string_view target,
                              double min_confidence);

// --- truecasing ---------------------------------------------------------------

class CasingLexicon {
 public:
  struct Entry {
    std::string surface;
    std::uint64_t count = 0;
  };

  // Records one vote for `lower` being written capitalized or lowercase.
  void add_evidence(std::string_view lower, bool capitalized, std::uint64_t n = 1);
  void set(std::string lower, std::string surface, std::uint64_t count);

  // Canonical surface for a lowercase form, majority vote, ties -> lowercase.
  std::optional<Entry> lookup(std::string_view lower) const;

  std::size_t size() const noexcept { return votes_.size(); }
  bool empty() const noexcept { return votes_.empty(); }

  // Entries sorted by key; the TSV form is `lower<TAB>surface<TAB>count`.
  std::vector<std::pair<std::string, Entry>> entries() const;
  void save_tsv(const std::filesystem::path& path) const;
  static CasingLexicon load_tsv(const std::filesystem::path& path);

 private:
  struct Votes {
    std::uint64_t capitalized = 0;
    std::uint64_t lower = 0;
    std::optional<std::string> fixed_surface;  // loaded from TSV
  };
  std::map<std::string, Votes, std::less<>> votes_;
};

// Adds the lemma evidence of one annotated document. Throws MissingLemmas
// when the document carries no lemma annotation.
void add_casing_evidence(CasingLexicon& lexicon, const Document& doc);

CasingLexicon build_casing_lexicon(const std::vector<Document>& docs);

std::string truecase_text(std::string_view text, const CasingLexicon& lexicon);
Document truecase(Document doc, const CasingLexicon& lexicon);

}  // namespace estcorpus
