#include <doctest.h>

#include <fstream>
#include <nlohmann/json.hpp>
#include <random>
#include <set>

#include "estcorpus/corpus_io.hpp"
#include "estcorpus/error.hpp"
#include "estcorpus/pretrain.hpp"
#include "test_support.hpp"

using namespace estcorpus;
using nlohmann::json;

namespace {

Vocab replay_vocab() {
  return Vocab::load(estc_test::fixture("replay_vocab/vocab.txt"), estc_test::fixture("replay_vocab/merges.txt"));
}

std::vector<TokenizedDocument> tokenize_all(const std::vector<Document>& docs, const Vocab& v) {
  std::vector<TokenizedDocument> out;
  for (const auto& d : docs) out.push_back(tokenize_document(d, v));
  return out;
}

// Character-level vocabulary over the synthetic alphabet.
Vocab char_vocab() {
  std::vector<std::string> pieces(kSpecialPieces.begin(), kSpecialPieces.end());
  pieces.emplace_back(kWordBoundary);
  for (char c : std::string("aeioulmnrstkvpdhj")) pieces.emplace_back(1, c);
  return Vocab::from_parts(pieces, {});
}

std::vector<TokenizedDocument> synthetic_docs(const Vocab& v, std::size_t n_docs, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n_docs; ++i) {
    Document d;
    d.id = "s" + std::to_string(i);
    const std::size_t sentences = 1 + rng() % 8;
    for (std::size_t k = 0; k < sentences; ++k) {
      if (k) d.text.push_back('\n');
      d.text += estc_test::random_sentence(rng, 1, 6);
    }
    docs.push_back(std::move(d));
  }
  return tokenize_all(docs, v);
}

template <typename T>
std::vector<T> as_vec(const json& j) {
  return j.get<std::vector<T>>();
}

}  // namespace

TEST_CASE("masked budgets") {
  CHECK(masked_budget(128, 0.15) == 20);
  CHECK(masked_budget(512, 0.15) == 77);
  CHECK(masked_budget(16, 0.15) == 3);
  CHECK(masked_budget(20, 0.15) == 3);
  CHECK(masked_budget(100, 0.0) == 0);
  CHECK(round_half_up(2.5) == 3);
  CHECK(round_half_up(0.15 * 10) == 2);
  CHECK(round_half_up(2.4999) == 2);
}

TEST_CASE("configuration validation") {
  GenerationConfig c;
  CHECK_NOTHROW(c.validate());
  c.max_seq_length = 4;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.masked_lm_prob = 1.2;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.shards = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK(GenerationConfig{}.shards == 4);
}

TEST_CASE("seeded generation matches the independent replay oracle") {
  // golden_examples.jsonl is produced by tests/oracles/replay_instances.py.
  const auto vocab = replay_vocab();
  const auto docs = tokenize_all(read_documents(estc_test::fixture("replay_docs.jsonl"), CorpusFormat::JsonLines), vocab);
  GenerationConfig c;
  c.max_seq_length = 16;
  c.masked_lm_prob = 0.15;
  c.random_next_prob = 0.5;
  c.short_seq_prob = 0.1;
  c.dupe_factor = 3;
  c.seed = 1;
  const auto instances = build_instances(docs, vocab, c);

  std::ifstream in(estc_test::fixture("golden_examples.jsonl"));
  std::vector<json> golden;
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) golden.push_back(json::parse(line));
  REQUIRE(instances.size() == golden.size());
  std::set<std::int64_t> labels;
  for (std::size_t i = 0; i < golden.size(); ++i) {
    CAPTURE(i);
    const auto ex = serialize_example(instances[i], vocab, c);
    const auto& g = golden[i];
    CHECK(ex.input_ids == as_vec<std::int64_t>(g["input_ids"]));
    CHECK(ex.input_mask == as_vec<std::int64_t>(g["input_mask"]));
    CHECK(ex.segment_ids == as_vec<std::int64_t>(g["segment_ids"]));
    CHECK(ex.masked_lm_positions == as_vec<std::int64_t>(g["masked_lm_positions"]));
    CHECK(ex.masked_lm_ids == as_vec<std::int64_t>(g["masked_lm_ids"]));
    CHECK(ex.masked_lm_weights == as_vec<float>(g["masked_lm_weights"]));
    CHECK(ex.next_sentence_label == g["next_sentence_labels"].get<std::int64_t>());
    labels.insert(ex.next_sentence_label);
  }
  CHECK(labels.size() == 2);
}

TEST_CASE("every generated instance satisfies the structural invariants") {
  const auto vocab = char_vocab();
  const auto docs = synthetic_docs(vocab, 60, 4);
  for (std::uint32_t L : {8u, 16u, 64u}) {
    GenerationConfig c;
    c.max_seq_length = L;
    c.dupe_factor = 2;
    c.seed = L;
    const auto instances = build_instances(docs, vocab, c);
    CHECK(instances.size() > 0);
    for (const auto& inst : instances) {
      REQUIRE_NOTHROW(check_instance(inst, L, c.budget()));
      CHECK(inst.tokens.size() <= L);
      CHECK(inst.tokens.front() == "[CLS]");
      CHECK(inst.tokens.back() == "[SEP]");
      CHECK(std::count(inst.tokens.begin(), inst.tokens.end(), "[SEP]") == 2);
      CHECK(std::is_sorted(inst.masked_positions.begin(), inst.masked_positions.end()));
      const std::size_t want =
          std::min<std::size_t>(c.budget(), std::max<std::size_t>(1, round_half_up(0.15 * maskable_count(inst))));
      CHECK(inst.masked_positions.size() == want);
      for (std::size_t k = 0; k < inst.masked_positions.size(); ++k) {
        const auto& label = inst.masked_labels[k];
        CHECK(vocab.id_of(label) >= kNumSpecials);
        const auto& now = inst.tokens[inst.masked_positions[k]];
        CHECK((now == "[MASK]" || vocab.id_of(now) >= kNumSpecials));
      }
    }
  }
}

TEST_CASE("worker count does not change the output") {
  const auto vocab = char_vocab();
  const auto docs = synthetic_docs(vocab, 150, 8);
  GenerationConfig c;
  c.max_seq_length = 32;
  c.dupe_factor = 3;
  const auto one = build_instances(docs, vocab, c, 1);
  CHECK(one == build_instances(docs, vocab, c, 4));
  CHECK(one == build_instances(docs, vocab, c, 3));
  c.seed += 1;
  CHECK_FALSE(one == build_instances(docs, vocab, c, 1));
}

TEST_CASE("degenerate next-sentence probabilities") {
  const auto vocab = char_vocab();
  const auto docs = synthetic_docs(vocab, 40, 12);
  GenerationConfig c;
  c.max_seq_length = 24;
  c.random_next_prob = 0.0;
  for (const auto& i : build_instances(docs, vocab, c)) CHECK_FALSE(i.is_random_next);
  c.random_next_prob = 1.0;
  for (const auto& i : build_instances(docs, vocab, c)) CHECK(i.is_random_next);
}

TEST_CASE("serialization pads to fixed shapes and inverts") {
  const auto vocab = char_vocab();
  const auto docs = synthetic_docs(vocab, 20, 2);
  GenerationConfig c;
  c.max_seq_length = 20;
  for (const auto& inst : build_instances(docs, vocab, c)) {
    const auto ex = serialize_example(inst, vocab, c);
    CHECK(ex.input_ids.size() == 20);
    CHECK(ex.input_mask.size() == 20);
    CHECK(ex.segment_ids.size() == 20);
    CHECK(ex.masked_lm_positions.size() == c.budget());
    CHECK(ex.masked_lm_ids.size() == c.budget());
    CHECK(ex.masked_lm_weights.size() == c.budget());
    const auto n = static_cast<std::size_t>(std::count(ex.input_mask.begin(), ex.input_mask.end(), 1));
    CHECK(n == inst.tokens.size());
    for (std::size_t k = n; k < 20; ++k) CHECK(ex.input_ids[k] == kPadId);
    CHECK(instance_from_example(ex, vocab) == inst);
  }
}

TEST_CASE("error conditions") {
  const auto vocab = char_vocab();
  const auto docs = synthetic_docs(vocab, 1, 3);
  GenerationConfig c;
  try {
    build_instances(docs, vocab, c);
    FAIL("expected CorpusTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CorpusTooSmall);
  }

  PretrainingInstance bare;
  bare.tokens = {"[CLS]", "[SEP]", "[SEP]"};
  bare.segment_ids = {0, 0, 1};
  Rng rng(1);
  try {
    apply_masking(bare, vocab, c, rng);
    FAIL("expected NoMaskableTokens");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NoMaskableTokens);
  }

  PretrainingInstance odd;
  odd.tokens = {"[CLS]", "zz", "[SEP]", "a", "[SEP]"};
  odd.segment_ids = {0, 0, 0, 1, 1};
  try {
    serialize_example(odd, vocab, c);
    FAIL("expected PieceNotInVocab");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PieceNotInVocab);
  }

  PretrainingInstance broken = odd;
  broken.tokens[1] = "a";
  broken.segment_ids = {0, 1, 0, 1, 1};
  CHECK_THROWS_AS(check_instance(broken, 128, 20), Error);
}
