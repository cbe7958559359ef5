#pragma once

// Masked-LM + next-sentence pretraining instances, following the BERT
// create-pretraining-data procedure with token-level masking.

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "estcorpus/bpe.hpp"
#include "estcorpus/document.hpp"

namespace estcorpus {

struct GenerationConfig {
  std::uint32_t max_seq_length = 128;
  double masked_lm_prob = 0.15;
  double random_next_prob = 0.5;
  double short_seq_prob = 0.1;
  std::uint32_t dupe_factor = 10;
  std::uint32_t shards = 4;
  std::uint64_t seed = 12345;

  // max_seq_length >= 5 (room for [CLS] A [SEP] B [SEP]), probabilities in [0,1], shards >= 1.
  void validate() const;
  std::uint32_t budget() const;
};

// ceil(masked_lm_prob * max_seq_length): 20 for 128 and 77 for 512 at 0.15.
std::uint32_t masked_budget(std::uint32_t max_seq_length, double masked_lm_prob);

// Half-up rounding of a non-negative value that came from decimal arithmetic.
std::uint32_t round_half_up(double x);

// mt19937_64 with distribution code written out here; the standard
// distributions are implementation-defined and would break reproducibility.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform in [0, 1) from the top 53 bits.
  double uniform();
  // Uniform integer in [lo, hi], unbiased.
  std::uint64_t randint(std::uint64_t lo, std::uint64_t hi);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[randint(0, i - 1)]);
  }

 private:
  std::mt19937_64 engine_;
};

// Seed for one (document, dupe) work item: seed XOR stable hash of both.
std::uint64_t item_seed(std::uint64_t seed, std::string_view doc_id, std::uint32_t dupe_index);

struct PretrainingInstance {
  std::vector<std::string> tokens;
  std::vector<std::int32_t> segment_ids;
  std::vector<std::uint32_t> masked_positions;
  std::vector<std::string> masked_labels;
  bool is_random_next = false;

  friend bool operator==(const PretrainingInstance&, const PretrainingInstance&) = default;
};

// Throws Internal describing the first violated instance invariant.
void check_instance(const PretrainingInstance& inst, std::uint32_t max_seq_length, std::uint32_t budget);

struct TokenizedDocument {
  std::string id;
  std::vector<std::vector<std::string>> sentences;  // non-empty piece lists
};

// Sentences are the non-blank lines of the text, each encoded to pieces.
TokenizedDocument tokenize_document(const Document& doc, const Vocab& vocab);

std::size_t maskable_count(const PretrainingInstance& inst);

// Chooses min(budget, max(1, round(prob * maskable))) non-special positions;
// each becomes [MASK] (80%), stays (10%) or a random non-special piece (10%).
PretrainingInstance apply_masking(PretrainingInstance inst, const Vocab& vocab, const GenerationConfig& config,
                                  Rng& rng);

// Unmasked instances of one document for one dupe pass.
std::vector<PretrainingInstance> create_instances_from_document(std::span<const TokenizedDocument> docs,
                                                                std::size_t doc_index, const Vocab& vocab,
                                                                const GenerationConfig& config, Rng& rng);

// All instances in (dupe index, document order). `workers` only changes speed.
void generate_instances(std::span<const TokenizedDocument> docs, const Vocab& vocab, const GenerationConfig& config,
                        unsigned workers, const std::function<void(PretrainingInstance&&)>& sink);

std::vector<PretrainingInstance> build_instances(std::span<const TokenizedDocument> docs, const Vocab& vocab,
                                                 const GenerationConfig& config, unsigned workers = 1);

struct SerializedExample {
  std::vector<std::int64_t> input_ids;
  std::vector<std::int64_t> input_mask;
  std::vector<std::int64_t> segment_ids;
  std::vector<std::int64_t> masked_lm_positions;
  std::vector<std::int64_t> masked_lm_ids;
  std::vector<float> masked_lm_weights;
  std::int64_t next_sentence_label = 0;

  friend bool operator==(const SerializedExample&, const SerializedExample&) = default;
};

SerializedExample serialize_example(const PretrainingInstance& inst, const Vocab& vocab,
                                    const GenerationConfig& config);

// Inverse of serialize_example (masked tokens read back as they were written).
PretrainingInstance instance_from_example(const SerializedExample& ex, const Vocab& vocab);

}  // namespace estcorpus
