#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "estcorpus/error.hpp"
#include "estcorpus/hash.hpp"
#include "estcorpus/parallel.hpp"
#include "estcorpus/pretrain.hpp"
#include "estcorpus/text.hpp"

namespace estcorpus {

namespace {

// Values such as 0.15 * 128 carry representation error of a few ulps; the
// slack keeps ceil/round on the intended decimal side.
constexpr double kDecimalSlack = 1e-9;

bool is_special_piece(std::string_view piece) {
  return piece == kSpecialPieces[kClsId] || piece == kSpecialPieces[kSepId];
}

void truncate_pair(std::vector<std::string>& a, std::vector<std::string>& b, std::size_t max_tokens, Rng& rng) {
  while (a.size() + b.size() > max_tokens) {
    auto& longer = a.size() > b.size() ? a : b;
    if (rng.uniform() < 0.5)
      longer.erase(longer.begin());
    else
      longer.pop_back();
  }
}

PretrainingInstance assemble(const std::vector<std::string>& a, const std::vector<std::string>& b,
                             bool is_random_next) {
  PretrainingInstance inst;
  inst.tokens.reserve(a.size() + b.size() + 3);
  inst.segment_ids.reserve(a.size() + b.size() + 3);
  inst.tokens.emplace_back(kSpecialPieces[kClsId]);
  inst.segment_ids.push_back(0);
  for (const auto& t : a) {
    inst.tokens.push_back(t);
    inst.segment_ids.push_back(0);
  }
  inst.tokens.emplace_back(kSpecialPieces[kSepId]);
  inst.segment_ids.push_back(0);
  for (const auto& t : b) {
    inst.tokens.push_back(t);
    inst.segment_ids.push_back(1);
  }
  inst.tokens.emplace_back(kSpecialPieces[kSepId]);
  inst.segment_ids.push_back(1);
  inst.is_random_next = is_random_next;
  return inst;
}

}  // namespace

void GenerationConfig::validate() const {
  auto prob = [](double v, std::string_view name) {
    if (!(v >= 0.0 && v <= 1.0))
      throw Error(ErrorCode::InvalidArgument, fmt::format("{} must lie in [0,1], got {}", name, v));
  };
  if (max_seq_length < 5)
    throw Error(ErrorCode::InvalidArgument, fmt::format("max_seq_length must be >= 5, got {}", max_seq_length));
  prob(masked_lm_prob, "masked_lm_prob");
  prob(random_next_prob, "random_next_prob");
  prob(short_seq_prob, "short_seq_prob");
  if (shards < 1) throw Error(ErrorCode::InvalidArgument, "shards must be >= 1");
}

std::uint32_t GenerationConfig::budget() const { return masked_budget(max_seq_length, masked_lm_prob); }

std::uint32_t masked_budget(std::uint32_t max_seq_length, double masked_lm_prob) {
  const double x = masked_lm_prob * static_cast<double>(max_seq_length);
  return static_cast<std::uint32_t>(std::max(0.0, std::ceil(x - kDecimalSlack)));
}

std::uint32_t round_half_up(double x) {
  return static_cast<std::uint32_t>(std::max(0.0, std::floor(x + 0.5 + kDecimalSlack)));
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::randint(std::uint64_t lo, std::uint64_t hi) {
  if (hi < lo) throw Error(ErrorCode::Internal, "randint with empty range");
  const std::uint64_t span = hi - lo;
  if (span == UINT64_MAX) return engine_();
  const std::uint64_t range = span + 1;
  // Reject the top partial bucket; when range divides 2^64 there is none.
  const std::uint64_t rem = UINT64_MAX % range;
  const std::uint64_t limit = rem == range - 1 ? UINT64_MAX : UINT64_MAX - rem - 1;
  for (;;) {
    const std::uint64_t r = engine_();
    if (r <= limit) return lo + r % range;
  }
}

std::uint64_t item_seed(std::uint64_t seed, std::string_view doc_id, std::uint32_t dupe_index) {
  std::string key(doc_id);
  key.push_back('\0');
  for (int i = 0; i < 4; ++i) key.push_back(static_cast<char>((dupe_index >> (8 * i)) & 0xFF));
  return seed ^ stable_hash64(key);
}

void check_instance(const PretrainingInstance& inst, std::uint32_t max_seq_length, std::uint32_t budget) {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::Internal, "instance invariant: " + what); };
  if (inst.tokens.size() > max_seq_length) fail("longer than max_seq_length");
  if (inst.tokens.empty() || inst.tokens[0] != kSpecialPieces[kClsId]) fail("first token is not [CLS]");
  if (std::count(inst.tokens.begin(), inst.tokens.end(), kSpecialPieces[kSepId]) != 2) fail("not exactly two [SEP]");
  if (inst.segment_ids.size() != inst.tokens.size()) fail("segment_ids misaligned");
  if (inst.masked_positions.size() != inst.masked_labels.size()) fail("labels misaligned with positions");
  if (inst.masked_positions.size() > budget) fail("more predictions than the masked budget");
  for (std::size_t i = 0; i < inst.masked_positions.size(); ++i) {
    const auto p = inst.masked_positions[i];
    if (i && p <= inst.masked_positions[i - 1]) fail("masked positions not strictly increasing");
    if (p >= inst.tokens.size()) fail("masked position out of range");
    if (p == 0 || inst.masked_labels[i] == kSpecialPieces[kClsId] || inst.masked_labels[i] == kSpecialPieces[kSepId])
      fail("masked position on [CLS]/[SEP]");
  }
  if (inst.masked_positions.empty() && maskable_count(inst) > 0 && budget > 0) fail("no prediction although maskable");
}

TokenizedDocument tokenize_document(const Document& doc, const Vocab& vocab) {
  TokenizedDocument out;
  out.id = doc.id;
  std::size_t start = 0;
  const std::string_view t = doc.text;
  while (start <= t.size()) {
    std::size_t end = t.find('\n', start);
    if (end == std::string_view::npos) end = t.size();
    auto pieces = vocab.encode_pieces(t.substr(start, end - start));
    if (!pieces.empty()) out.sentences.push_back(std::move(pieces));
    start = end + 1;
  }
  return out;
}

std::size_t maskable_count(const PretrainingInstance& inst) {
  std::size_t n = 0;
  for (const auto& t : inst.tokens)
    if (!is_special_piece(t)) ++n;
  return n;
}

PretrainingInstance apply_masking(PretrainingInstance inst, const Vocab& vocab, const GenerationConfig& config,
                                  Rng& rng) {
  std::vector<std::uint32_t> candidates;
  for (std::uint32_t i = 0; i < inst.tokens.size(); ++i)
    if (!is_special_piece(inst.tokens[i])) candidates.push_back(i);
  if (candidates.empty()) throw Error(ErrorCode::NoMaskableTokens, "instance has no maskable token");
  if (vocab.size() <= static_cast<std::size_t>(kNumSpecials))
    throw Error(ErrorCode::InvalidArgument, "vocabulary has no non-special pieces");

  const std::uint32_t wanted =
      std::max<std::uint32_t>(1, round_half_up(config.masked_lm_prob * static_cast<double>(candidates.size())));
  const std::uint32_t num = std::min(config.budget(), wanted);

  rng.shuffle(candidates);
  candidates.resize(num);

  std::vector<std::pair<std::uint32_t, std::string>> picked;
  picked.reserve(num);
  for (const auto pos : candidates) {
    std::string original = inst.tokens[pos];
    if (rng.uniform() < 0.8) {
      inst.tokens[pos] = std::string(kSpecialPieces[kMaskId]);
    } else if (rng.uniform() < 0.5) {
      // keep
    } else {
      // specials are excluded so [CLS]/[SEP] counts stay intact
      const auto id = rng.randint(kNumSpecials, vocab.size() - 1);
      inst.tokens[pos] = vocab.piece(static_cast<std::int32_t>(id));
    }
    picked.emplace_back(pos, std::move(original));
  }
  std::sort(picked.begin(), picked.end());
  inst.masked_positions.clear();
  inst.masked_labels.clear();
  for (auto& [pos, label] : picked) {
    inst.masked_positions.push_back(pos);
    inst.masked_labels.push_back(std::move(label));
  }
  return inst;
}

std::vector<PretrainingInstance> create_instances_from_document(std::span<const TokenizedDocument> docs,
                                                                std::size_t doc_index, const Vocab&,
                                                                const GenerationConfig& config, Rng& rng) {
  if (docs.size() < 2) throw Error(ErrorCode::CorpusTooSmall, "need at least two documents for random next segments");
  const auto& document = docs[doc_index].sentences;
  std::vector<PretrainingInstance> instances;
  if (document.empty()) return instances;

  const std::size_t max_tokens = config.max_seq_length - 3;
  std::size_t target = max_tokens;
  if (rng.uniform() < config.short_seq_prob) target = rng.randint(2, max_tokens);

  std::vector<const std::vector<std::string>*> chunk;
  std::size_t chunk_len = 0;
  std::size_t i = 0;
  while (i < document.size()) {
    chunk.push_back(&document[i]);
    chunk_len += document[i].size();
    if (i + 1 == document.size() || chunk_len >= target) {
      const bool random_next = rng.uniform() < config.random_next_prob;
      if (!random_next && chunk.size() == 1 && i + 1 < document.size()) {
        // an actual-next pair needs a second sentence: take the continuation
        ++i;
        chunk.push_back(&document[i]);
      }
      std::size_t a_end = 1;
      if (chunk.size() >= 2) a_end = rng.randint(1, chunk.size() - 1);
      std::vector<std::string> a;
      for (std::size_t j = 0; j < a_end; ++j) a.insert(a.end(), chunk[j]->begin(), chunk[j]->end());
      std::vector<std::string> b;
      bool emit = true;
      if (random_next) {
        const std::size_t target_b = target > a.size() ? target - a.size() : 1;
        std::size_t other = rng.randint(0, docs.size() - 2);
        if (other >= doc_index) ++other;
        const auto& random_doc = docs[other].sentences;
        if (random_doc.empty()) {
          emit = false;
        } else {
          const std::size_t start = rng.randint(0, random_doc.size() - 1);
          for (std::size_t j = start; j < random_doc.size(); ++j) {
            b.insert(b.end(), random_doc[j].begin(), random_doc[j].end());
            if (b.size() >= target_b) break;
          }
        }
        // sentences after the split point go back to the pool
        i -= chunk.size() - a_end;
      } else if (chunk.size() >= 2) {
        for (std::size_t j = a_end; j < chunk.size(); ++j) b.insert(b.end(), chunk[j]->begin(), chunk[j]->end());
      } else if (a.size() >= 2) {
        // last sentence of the document on its own: its tail is the true continuation
        const std::size_t split = rng.randint(1, a.size() - 1);
        b.assign(a.begin() + static_cast<std::ptrdiff_t>(split), a.end());
        a.resize(split);
      } else {
        emit = false;
      }
      if (emit) {
        truncate_pair(a, b, max_tokens, rng);
        instances.push_back(assemble(a, b, random_next));
      }
      chunk.clear();
      chunk_len = 0;
    }
    ++i;
  }
  return instances;
}

void generate_instances(std::span<const TokenizedDocument> docs, const Vocab& vocab, const GenerationConfig& config,
                        unsigned workers, const std::function<void(PretrainingInstance&&)>& sink) {
  config.validate();
  if (docs.size() < 2) throw Error(ErrorCode::CorpusTooSmall, "need at least two documents for random next segments");
  const std::size_t batch = std::max<std::size_t>(64, 64 * std::size_t{std::max(1u, workers)});
  std::vector<std::vector<PretrainingInstance>> slots;
  for (std::uint32_t dupe = 0; dupe < config.dupe_factor; ++dupe) {
    for (std::size_t begin = 0; begin < docs.size(); begin += batch) {
      const std::size_t end = std::min(docs.size(), begin + batch);
      slots.assign(end - begin, {});
      parallel_for(end - begin, workers, [&](std::size_t k) {
        const std::size_t d = begin + k;
        Rng rng(item_seed(config.seed, docs[d].id, dupe));
        auto made = create_instances_from_document(docs, d, vocab, config, rng);
        for (auto& inst : made) inst = apply_masking(std::move(inst), vocab, config, rng);
        slots[k] = std::move(made);
      });
      for (auto& slot : slots)
        for (auto& inst : slot) sink(std::move(inst));
    }
  }
}

std::vector<PretrainingInstance> build_instances(std::span<const TokenizedDocument> docs, const Vocab& vocab,
                                                 const GenerationConfig& config, unsigned workers) {
  std::vector<PretrainingInstance> out;
  generate_instances(docs, vocab, config, workers, [&](PretrainingInstance&& inst) { out.push_back(std::move(inst)); });
  return out;
}

SerializedExample serialize_example(const PretrainingInstance& inst, const Vocab& vocab,
                                    const GenerationConfig& config) {
  const std::size_t L = config.max_seq_length;
  const std::size_t B = config.budget();
  if (inst.tokens.size() > L)
    throw Error(ErrorCode::InvalidArgument, fmt::format("instance of {} tokens exceeds {}", inst.tokens.size(), L));
  if (inst.masked_positions.size() > B)
    throw Error(ErrorCode::InvalidArgument,
                fmt::format("{} predictions exceed the budget of {}", inst.masked_positions.size(), B));
  auto id_of = [&](const std::string& piece) -> std::int64_t {
    const auto id = vocab.id_of(piece);
    if (id < 0) throw Error(ErrorCode::PieceNotInVocab, fmt::format("piece '{}' is not in the vocabulary", piece));
    return id;
  };

  SerializedExample ex;
  ex.input_ids.reserve(L);
  for (const auto& t : inst.tokens) ex.input_ids.push_back(id_of(t));
  ex.input_mask.assign(inst.tokens.size(), 1);
  ex.segment_ids.assign(inst.segment_ids.begin(), inst.segment_ids.end());
  ex.input_ids.resize(L, kPadId);
  ex.input_mask.resize(L, 0);
  ex.segment_ids.resize(L, 0);

  for (std::size_t i = 0; i < inst.masked_positions.size(); ++i) {
    ex.masked_lm_positions.push_back(inst.masked_positions[i]);
    ex.masked_lm_ids.push_back(id_of(inst.masked_labels[i]));
    ex.masked_lm_weights.push_back(1.0f);
  }
  ex.masked_lm_positions.resize(B, 0);
  ex.masked_lm_ids.resize(B, 0);
  ex.masked_lm_weights.resize(B, 0.0f);
  ex.next_sentence_label = inst.is_random_next ? 1 : 0;
  return ex;
}

PretrainingInstance instance_from_example(const SerializedExample& ex, const Vocab& vocab) {
  PretrainingInstance inst;
  std::size_t n = 0;
  while (n < ex.input_mask.size() && ex.input_mask[n] == 1) ++n;
  for (std::size_t i = n; i < ex.input_mask.size(); ++i)
    if (ex.input_mask[i] != 0) throw Error(ErrorCode::MalformedRecord, "input_mask is not of the form 1^n 0^m");
  for (std::size_t i = 0; i < n; ++i) {
    inst.tokens.push_back(vocab.piece(static_cast<std::int32_t>(ex.input_ids.at(i))));
    inst.segment_ids.push_back(static_cast<std::int32_t>(ex.segment_ids.at(i)));
  }
  for (std::size_t i = 0; i < ex.masked_lm_weights.size(); ++i) {
    if (ex.masked_lm_weights[i] == 0.0f) continue;
    inst.masked_positions.push_back(static_cast<std::uint32_t>(ex.masked_lm_positions.at(i)));
    inst.masked_labels.push_back(vocab.piece(static_cast<std::int32_t>(ex.masked_lm_ids.at(i))));
  }
  inst.is_random_next = ex.next_sentence_label != 0;
  return inst;
}

}  // namespace estcorpus
