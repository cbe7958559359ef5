#pragma once

// End-to-end orchestration. Document stages run in a fixed order
// (strip, langfilter, dedup, heuristics, truecase) over batches of the input
// stream; pure stages fan out over workers, dedup stays sequential, and
// every output is identical for any worker count.

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "estcorpus/bpe.hpp"
#include "estcorpus/config.hpp"
#include "estcorpus/document.hpp"
#include "estcorpus/pretrain.hpp"

namespace estcorpus {

// Data files shipped with the library (stopwords, language profiles).
// ESTCORPUS_DATA_DIR in the environment overrides the build-time location.
std::filesystem::path default_data_dir();

struct StageReport {
  std::string stage;
  CorpusStats input;
  CorpusStats kept;
  std::map<std::string, std::uint64_t> drops;  // drop kind name -> count
};

// Within a PipelineReport the shard paths are relative to its output_dir.
struct ExampleSummary {
  std::vector<std::filesystem::path> shards;
  std::vector<std::uint64_t> shard_sizes;
  std::uint64_t examples = 0;
  std::uint64_t documents = 0;
};

struct PipelineReport {
  std::vector<StageReport> stages;  // "ingest" first, then each enabled document stage
  CorpusStats before;
  CorpusStats after;
  std::map<std::string, std::uint64_t> drops;
  std::filesystem::path output_dir;
  // Artifact name -> path; paths under output_dir are stored relative to it.
  std::map<std::string, std::filesystem::path> artifacts;
  std::size_t vocab_size = 0;
  ExampleSummary examples;
};

PipelineReport run_pipeline(const PipelineConfig& config, unsigned workers = 1);

// Machine-readable report: one JSON object per line.
std::string report_jsonl(const PipelineReport& report);
// Before/after table plus per-stage counts.
std::string report_table(const PipelineReport& report);

// Reads a corpus and encodes its sentences; documents without pieces are skipped.
std::vector<TokenizedDocument> tokenize_corpus(const std::filesystem::path& path, CorpusFormat format,
                                               const Vocab& vocab);

// Generates, checks, serializes and shards pretraining examples.
ExampleSummary make_examples(std::span<const TokenizedDocument> docs, const Vocab& vocab,
                             const GenerationConfig& config, const std::filesystem::path& out_dir,
                             unsigned workers = 1);

}  // namespace estcorpus
