#pragma once

// Pipeline configuration: a line-oriented `key = value` file with [sections].
//
//   [input]     paths (comma separated), format
//   [stages]    strip, langfilter, dedup, heuristics, truecase, bpe, examples
//   [filter]    min_words, max_stopword_ratio, max_punct_ratio,
//               lang_confidence_min, stopwords, target_lang, profiles
//   [truecase]  lexicon
//   [bpe]       vocab_size, vocab_file, merges_file
//   [pretrain]  max_seq_length, masked_lm_prob, random_next_prob,
//               short_seq_prob, dupe_factor, shards, seed
//   [output]    dir, report, format, corpus
//
// '#' and ';' start comment lines. Relative paths resolve against the
// directory of the config file.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "estcorpus/clean.hpp"
#include "estcorpus/corpus_io.hpp"
#include "estcorpus/pretrain.hpp"

namespace estcorpus {

struct StageToggles {
  bool strip = true;
  bool langfilter = true;
  bool dedup = true;
  bool heuristics = true;
  bool truecase = true;
  bool bpe = true;
  bool examples = true;
};

struct PipelineConfig {
  std::vector<std::filesystem::path> inputs;
  CorpusFormat input_format = CorpusFormat::VertXml;
  StageToggles stages;

  FilterThresholds thresholds;
  std::filesystem::path stopwords_file;  // empty: built-in Estonian list
  std::string target_lang = "et";
  std::filesystem::path profiles_dir;  // empty: shipped profiles

  std::filesystem::path lexicon_file;  // empty: built from lemma annotations

  std::uint32_t vocab_size = 50000;
  std::filesystem::path vocab_file;   // used when the bpe stage is off
  std::filesystem::path merges_file;

  GenerationConfig generation;

  std::filesystem::path output_dir = "out";
  std::filesystem::path report_file;  // empty: <output_dir>/report.jsonl
  std::filesystem::path corpus_file;  // empty: <output_dir>/corpus.<ext>
  std::optional<CorpusFormat> output_format;  // default: the input format
};

struct Diagnostic {
  std::uint64_t line = 0;  // 0 when not tied to a line (overrides, cross-field checks)
  std::string message;

  std::string to_string(std::string_view source) const;
};

struct ConfigResult {
  std::optional<PipelineConfig> config;  // set only when diagnostics is empty
  std::vector<Diagnostic> diagnostics;
};

// Every `section.key` the parser accepts.
const std::vector<std::string>& config_keys();

// Closest known key by subsequence match, then edit distance; empty if none is close.
std::string suggest_key(std::string_view unknown);

ConfigResult parse_config(std::string_view text, const std::filesystem::path& base_dir = {});
ConfigResult validate_config(const std::filesystem::path& path);

// Applies `key=value` with key either `section.key` or a bare key that is
// unique across sections. Returns a diagnostic on failure.
std::optional<Diagnostic> apply_override(PipelineConfig& config, std::string_view key, std::string_view value);

// Cross-field checks run after parsing and after overrides.
std::vector<Diagnostic> check_config(const PipelineConfig& config);

}  // namespace estcorpus
