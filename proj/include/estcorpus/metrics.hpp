#pragma once

// Evaluation scorers: token-tagging accuracy, conlleval-compatible entity
// span F1 (IOB2 with I-after-O repair) and classification accuracy.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace estcorpus {

using TagSequence = std::vector<std::string>;

// Throws LengthMismatch naming the first misaligned sequence, EmptyInput on zero tokens.
double tagging_accuracy(std::span<const TagSequence> gold, std::span<const TagSequence> pred);

double classification_accuracy(std::span<const std::string> gold, std::span<const std::string> pred);

struct SpanCounts {
  std::uint64_t gold = 0;
  std::uint64_t predicted = 0;
  std::uint64_t correct = 0;

  // Percentages; 0 when the denominator is 0.
  double precision() const noexcept;
  double recall() const noexcept;
  double f1() const noexcept;

  friend bool operator==(const SpanCounts&, const SpanCounts&) = default;
};

struct SpanF1Report {
  std::map<std::string, SpanCounts> per_type;  // types seen in gold or prediction
  SpanCounts overall;
  std::uint64_t tokens = 0;
  std::uint64_t correct_tags = 0;

  double token_accuracy() const noexcept;
};

// Tags must be "O", "B-<type>" or "I-<type>"; anything else is MalformedTag.
SpanF1Report ner_span_f1(std::span<const TagSequence> gold, std::span<const TagSequence> pred);

// conlleval's text layout.
std::string conlleval_report(const SpanF1Report& report);
// One JSON object per type, then one for "overall".
std::string span_report_jsonl(const SpanF1Report& report);

struct ColumnFile {
  std::vector<TagSequence> tokens;
  std::vector<TagSequence> gold;
  std::vector<TagSequence> pred;
};

// `token gold pred` columns (tab or space separated), blank line between
// sequences; -DOCSTART- lines act as boundaries. Throws MalformedRecord(line).
ColumnFile read_column_file(const std::filesystem::path& path);

struct LabelPairs {
  std::vector<std::string> gold;
  std::vector<std::string> pred;
};

// One `gold pred` pair per non-blank line.
LabelPairs read_label_pairs(const std::filesystem::path& path);

}  // namespace estcorpus
