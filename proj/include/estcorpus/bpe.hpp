#pragma once

// Character-level byte-pair encoding in the sentencepiece style: text is NFKC
// normalized, split on whitespace, and every word is prefixed with the
// boundary marker U+2581 as a symbol of its own. Training repeatedly merges
// the most frequent adjacent pair (ties: lexicographically smallest
// concatenation, then smallest left piece); merges whose concatenation is
// already a piece are skipped so that every merge adds exactly one piece.

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace estcorpus {

inline constexpr std::string_view kWordBoundary = "\xE2\x96\x81";  // U+2581

inline constexpr std::int32_t kPadId = 0;
inline constexpr std::int32_t kUnkId = 1;
inline constexpr std::int32_t kClsId = 2;
inline constexpr std::int32_t kSepId = 3;
inline constexpr std::int32_t kMaskId = 4;
inline constexpr std::int32_t kNumSpecials = 5;
inline constexpr std::array<std::string_view, kNumSpecials> kSpecialPieces = {"[PAD]", "[UNK]", "[CLS]", "[SEP]",
                                                                              "[MASK]"};

using MergeRule = std::pair<std::string, std::string>;

class Vocab {
 public:
  Vocab() = default;

  // Validates the layout: specials at 0-4, each merge built from the
  // alphabet or earlier merges, and its concatenation present as a piece.
  static Vocab from_parts(std::vector<std::string> pieces, std::vector<MergeRule> merges,
                          std::string boundary = std::string(kWordBoundary));
  static Vocab load(const std::filesystem::path& vocab_file, const std::filesystem::path& merges_file);
  void save(const std::filesystem::path& vocab_file, const std::filesystem::path& merges_file) const;

  std::size_t size() const noexcept { return pieces_.size(); }
  std::size_t alphabet_size() const noexcept { return pieces_.size() - kNumSpecials - merges_.size(); }
  const std::vector<std::string>& pieces() const noexcept { return pieces_; }
  const std::vector<MergeRule>& merges() const noexcept { return merges_; }
  const std::string& boundary() const noexcept { return boundary_; }

  const std::string& piece(std::int32_t id) const;
  // -1 when absent.
  std::int32_t id_of(std::string_view piece) const noexcept;

  std::vector<std::int32_t> encode(std::string_view text) const;
  std::vector<std::string> encode_pieces(std::string_view text) const;
  // Ids for one already-normalized word (no whitespace); appended to `out`.
  void encode_word(std::string_view word, std::vector<std::int32_t>& out) const;
  std::string decode(std::span<const std::int32_t> ids) const;

 private:
  void index();

  std::vector<std::string> pieces_;
  std::vector<MergeRule> merges_;
  std::string boundary_ = std::string(kWordBoundary);
  std::unordered_map<std::string, std::int32_t> ids_;
  // (left id << 32 | right id) -> (rank, merged id)
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::int32_t>> merge_index_;
};

// Accumulates word frequencies; counts are additive so shards can be merged.
class BpeTrainer {
 public:
  explicit BpeTrainer(std::string boundary = std::string(kWordBoundary)) : boundary_(std::move(boundary)) {}

  void add_text(std::string_view text);
  void merge_from(const BpeTrainer& other);
  std::size_t distinct_words() const noexcept { return word_counts_.size(); }

  // Throws EmptyCorpus without words, VocabSizeTooSmall when vocab_size does
  // not exceed specials + alphabet. Stops early if no pair is left to merge.
  Vocab train(std::size_t vocab_size) const;

 private:
  std::string boundary_;
  std::unordered_map<std::string, std::uint64_t> word_counts_;
};

Vocab train_bpe(std::span<const std::string> texts, std::size_t vocab_size,
                std::string_view boundary = kWordBoundary);

}  // namespace estcorpus
