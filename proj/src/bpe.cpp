#include "estcorpus/bpe.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <unordered_set>

#include <fmt/format.h>

#include "estcorpus/error.hpp"
#include "estcorpus/text.hpp"

namespace estcorpus {

namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t pair_key(std::int32_t l, std::int32_t r) noexcept {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(l)) << 32) | static_cast<std::uint32_t>(r);
}
constexpr std::int32_t key_left(std::uint64_t k) noexcept { return static_cast<std::int32_t>(k >> 32); }
constexpr std::int32_t key_right(std::uint64_t k) noexcept { return static_cast<std::int32_t>(k & 0xFFFFFFFFu); }

// Three-way comparison of a1+a2 against b1+b2 without building either string.
int compare_concat(std::string_view a1, std::string_view a2, std::string_view b1, std::string_view b2) {
  const std::size_t na = a1.size() + a2.size();
  const std::size_t nb = b1.size() + b2.size();
  const std::size_t n = std::min(na, nb);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ca = static_cast<unsigned char>(i < a1.size() ? a1[i] : a2[i - a1.size()]);
    const auto cb = static_cast<unsigned char>(i < b1.size() ? b1[i] : b2[i - b1.size()]);
    if (ca != cb) return ca < cb ? -1 : 1;
  }
  return na == nb ? 0 : (na < nb ? -1 : 1);
}

std::vector<std::string> split_chars(std::string_view word) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < word.size()) {
    const std::size_t start = pos;
    text::next_code_point(word, pos);
    out.emplace_back(word.substr(start, pos - start));
  }
  return out;
}

std::vector<std::string> read_lines(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::UnreadableFile, fmt::format("cannot read '{}'", path.string()));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

// --- Vocab -------------------------------------------------------------------

Vocab Vocab::from_parts(std::vector<std::string> pieces, std::vector<MergeRule> merges, std::string boundary) {
  if (pieces.size() < static_cast<std::size_t>(kNumSpecials))
    throw Error(ErrorCode::MalformedRecord, "vocabulary is shorter than the special tokens");
  for (std::int32_t i = 0; i < kNumSpecials; ++i)
    if (pieces[i] != kSpecialPieces[i])
      throw Error(ErrorCode::MalformedRecord,
                  fmt::format("piece {} must be {}, found '{}'", i, kSpecialPieces[i], pieces[i]));
  if (merges.size() > pieces.size() - kNumSpecials)
    throw Error(ErrorCode::MalformedRecord, "more merges than non-special pieces");

  Vocab v;
  v.pieces_ = std::move(pieces);
  v.merges_ = std::move(merges);
  v.boundary_ = std::move(boundary);
  v.index();

  std::unordered_set<std::string_view> merged;
  for (const auto& [l, r] : v.merges_) merged.insert(v.pieces_[v.ids_.at(l + r)]);
  std::unordered_set<std::string_view> available;
  for (std::size_t i = kNumSpecials; i < v.pieces_.size(); ++i)
    if (!merged.count(v.pieces_[i])) available.insert(v.pieces_[i]);
  for (const auto& [l, r] : v.merges_) {
    if (!available.count(l) || !available.count(r))
      throw Error(ErrorCode::MalformedRecord,
                  fmt::format("merge '{} {}' uses a piece not derivable from earlier merges", l, r));
    available.insert(v.pieces_[v.ids_.at(l + r)]);
  }
  return v;
}

void Vocab::index() {
  ids_.clear();
  ids_.reserve(pieces_.size());
  for (std::size_t i = 0; i < pieces_.size(); ++i) {
    if (pieces_[i].empty()) throw Error(ErrorCode::MalformedRecord, fmt::format("empty piece at id {}", i));
    if (!ids_.emplace(pieces_[i], static_cast<std::int32_t>(i)).second)
      throw Error(ErrorCode::MalformedRecord, fmt::format("duplicate piece '{}'", pieces_[i]));
  }
  merge_index_.clear();
  merge_index_.reserve(merges_.size());
  for (std::size_t rank = 0; rank < merges_.size(); ++rank) {
    const auto& [l, r] = merges_[rank];
    const auto li = id_of(l);
    const auto ri = id_of(r);
    const auto mi = id_of(l + r);
    if (li < kNumSpecials || ri < kNumSpecials || mi < kNumSpecials)
      throw Error(ErrorCode::MalformedRecord, fmt::format("merge '{} {}' refers to unknown or special pieces", l, r));
    if (!merge_index_.emplace(pair_key(li, ri), std::make_pair(static_cast<std::uint32_t>(rank), mi)).second)
      throw Error(ErrorCode::MalformedRecord, fmt::format("duplicate merge '{} {}'", l, r));
  }
}

Vocab Vocab::load(const fs::path& vocab_file, const fs::path& merges_file) {
  auto pieces = read_lines(vocab_file);
  while (!pieces.empty() && pieces.back().empty()) pieces.pop_back();
  std::vector<MergeRule> merges;
  std::uint64_t line_no = 0;
  for (auto& line : read_lines(merges_file)) {
    ++line_no;
    if (line.empty()) continue;
    const auto sp = line.find(' ');
    if (sp == std::string::npos || sp == 0 || sp + 1 >= line.size() || line.find(' ', sp + 1) != std::string::npos)
      throw MalformedRecordError(line_no, "merge line must be 'left right'");
    merges.emplace_back(line.substr(0, sp), line.substr(sp + 1));
  }
  return from_parts(std::move(pieces), std::move(merges));
}

void Vocab::save(const fs::path& vocab_file, const fs::path& merges_file) const {
  auto write = [](const fs::path& p, auto&& body) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write '{}'", p.string()));
    body(out);
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, fmt::format("write failed on '{}'", p.string()));
  };
  write(vocab_file, [&](std::ofstream& out) {
    for (const auto& p : pieces_) out << p << '\n';
  });
  write(merges_file, [&](std::ofstream& out) {
    for (const auto& [l, r] : merges_) out << l << ' ' << r << '\n';
  });
}

const std::string& Vocab::piece(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= pieces_.size())
    throw Error(ErrorCode::IdOutOfRange, fmt::format("piece id {} outside vocabulary of {}", id, pieces_.size()));
  return pieces_[static_cast<std::size_t>(id)];
}

std::int32_t Vocab::id_of(std::string_view piece) const noexcept {
  const auto it = ids_.find(std::string(piece));
  return it == ids_.end() ? -1 : it->second;
}

void Vocab::encode_word(std::string_view word, std::vector<std::int32_t>& out) const {
  std::vector<std::int32_t> syms;
  syms.reserve(word.size() + 1);
  auto symbol_id = [&](std::string_view s) {
    const auto id = id_of(s);
    return id < kNumSpecials ? kUnkId : id;
  };
  syms.push_back(symbol_id(boundary_));
  std::size_t pos = 0;
  while (pos < word.size()) {
    const std::size_t start = pos;
    text::next_code_point(word, pos);
    syms.push_back(symbol_id(word.substr(start, pos - start)));
  }

  // Repeatedly apply the lowest-ranked merge present; for a vocabulary whose
  // merges only use earlier pieces this equals replaying the merge list.
  for (;;) {
    std::uint32_t best_rank = UINT32_MAX;
    std::int32_t best_left = -1;
    std::int32_t best_right = -1;
    std::int32_t best_result = -1;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      const auto it = merge_index_.find(pair_key(syms[i], syms[i + 1]));
      if (it != merge_index_.end() && it->second.first < best_rank) {
        best_rank = it->second.first;
        best_left = syms[i];
        best_right = syms[i + 1];
        best_result = it->second.second;
      }
    }
    if (best_result < 0) break;
    std::size_t w = 0;
    for (std::size_t i = 0; i < syms.size(); ++i) {
      if (i + 1 < syms.size() && syms[i] == best_left && syms[i + 1] == best_right) {
        syms[w++] = best_result;
        ++i;
      } else {
        syms[w++] = syms[i];
      }
    }
    syms.resize(w);
  }
  out.insert(out.end(), syms.begin(), syms.end());
}

std::vector<std::int32_t> Vocab::encode(std::string_view input) const {
  const std::string normalized = text::nfkc(input);
  std::vector<std::int32_t> ids;
  for (auto word : text::split_words(normalized)) encode_word(word, ids);
  return ids;
}

std::vector<std::string> Vocab::encode_pieces(std::string_view input) const {
  std::vector<std::string> out;
  for (auto id : encode(input)) out.push_back(pieces_[static_cast<std::size_t>(id)]);
  return out;
}

std::string Vocab::decode(std::span<const std::int32_t> ids) const {
  std::string joined;
  for (auto id : ids) joined += piece(id);
  std::string out;
  out.reserve(joined.size());
  std::size_t i = 0;
  while (i < joined.size()) {
    if (joined.compare(i, boundary_.size(), boundary_) == 0) {
      out.push_back(' ');
      i += boundary_.size();
    } else {
      out.push_back(joined[i++]);
    }
  }
  const auto first = out.find_first_not_of(' ');
  if (first == std::string::npos) return {};
  const auto last = out.find_last_not_of(' ');
  return out.substr(first, last - first + 1);
}

// --- training ----------------------------------------------------------------

void BpeTrainer::add_text(std::string_view input) {
  const std::string normalized = text::nfkc(input);
  for (auto word : text::split_words(normalized)) ++word_counts_[std::string(word)];
}

void BpeTrainer::merge_from(const BpeTrainer& other) {
  for (const auto& [w, c] : other.word_counts_) word_counts_[w] += c;
}

Vocab BpeTrainer::train(std::size_t vocab_size) const {
  if (word_counts_.empty()) throw Error(ErrorCode::EmptyCorpus, "BPE training corpus has no words");

  // Unique words in a fixed order so training never depends on hash-map iteration.
  std::vector<std::pair<std::string_view, std::uint64_t>> sorted_words(word_counts_.begin(), word_counts_.end());
  std::sort(sorted_words.begin(), sorted_words.end());

  std::set<std::string> alphabet{boundary_};
  for (const auto& [w, c] : sorted_words)
    for (auto& ch : split_chars(w)) alphabet.insert(std::move(ch));

  const std::size_t base = kNumSpecials + alphabet.size();
  if (vocab_size <= base)
    throw Error(ErrorCode::VocabSizeTooSmall,
                fmt::format("vocab_size {} must exceed {} specials + {} alphabet symbols", vocab_size, kNumSpecials,
                            alphabet.size()));

  std::vector<std::string> pieces(kSpecialPieces.begin(), kSpecialPieces.end());
  pieces.insert(pieces.end(), alphabet.begin(), alphabet.end());
  std::unordered_map<std::string, std::int32_t> piece_ids;
  for (std::size_t i = 0; i < pieces.size(); ++i) piece_ids.emplace(pieces[i], static_cast<std::int32_t>(i));

  struct Word {
    std::vector<std::int32_t> syms;
    std::int64_t count;
  };
  std::vector<Word> words;
  words.reserve(sorted_words.size());
  for (const auto& [w, c] : sorted_words) {
    Word word{{piece_ids.at(boundary_)}, static_cast<std::int64_t>(c)};
    for (const auto& ch : split_chars(w)) word.syms.push_back(piece_ids.at(ch));
    words.push_back(std::move(word));
  }

  std::unordered_map<std::uint64_t, std::int64_t> pair_counts;
  std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> pair_words;
  for (std::uint32_t wi = 0; wi < words.size(); ++wi) {
    const auto& syms = words[wi].syms;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      const auto k = pair_key(syms[i], syms[i + 1]);
      pair_counts[k] += words[wi].count;
      pair_words[k].push_back(wi);
    }
  }

  struct Candidate {
    std::int64_t count;
    std::uint64_t key;
  };
  // priority_queue pops the "largest": higher count, then smaller concatenation, then smaller left piece.
  auto lower_priority = [&pieces](const Candidate& a, const Candidate& b) {
    if (a.count != b.count) return a.count < b.count;
    const auto& al = pieces[key_left(a.key)];
    const auto& ar = pieces[key_right(a.key)];
    const auto& bl = pieces[key_left(b.key)];
    const auto& br = pieces[key_right(b.key)];
    const int c = compare_concat(al, ar, bl, br);
    if (c != 0) return c > 0;
    return al > bl;
  };
  std::priority_queue<Candidate, std::vector<Candidate>, decltype(lower_priority)> heap(lower_priority);
  for (const auto& [k, c] : pair_counts)
    if (c > 0) heap.push({c, k});

  std::vector<MergeRule> merges;
  std::vector<std::uint32_t> visit_stamp(words.size(), 0);
  std::uint32_t stamp = 0;
  std::unordered_set<std::uint64_t> touched;

  while (pieces.size() < vocab_size && !heap.empty()) {
    const Candidate top = heap.top();
    heap.pop();
    const auto cur = pair_counts.find(top.key);
    if (cur == pair_counts.end() || cur->second != top.count) continue;  // stale entry

    const std::int32_t left = key_left(top.key);
    const std::int32_t right = key_right(top.key);
    std::string merged = pieces[left] + pieces[right];
    if (piece_ids.count(merged)) {
      // The concatenation already exists; never merge this pair.
      pair_counts.erase(cur);
      continue;
    }
    const auto new_id = static_cast<std::int32_t>(pieces.size());
    piece_ids.emplace(merged, new_id);
    merges.emplace_back(pieces[left], pieces[right]);
    pieces.push_back(std::move(merged));

    ++stamp;
    touched.clear();
    const auto occurrences = std::move(pair_words[top.key]);
    pair_words.erase(top.key);
    for (const auto wi : occurrences) {
      if (visit_stamp[wi] == stamp) continue;
      visit_stamp[wi] = stamp;
      Word& word = words[wi];
      auto& syms = word.syms;
      bool present = false;
      for (std::size_t i = 0; i + 1 < syms.size(); ++i)
        if (syms[i] == left && syms[i + 1] == right) present = true;
      if (!present) continue;

      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        const auto k = pair_key(syms[i], syms[i + 1]);
        pair_counts[k] -= word.count;
        touched.insert(k);
      }
      std::size_t w = 0;
      for (std::size_t i = 0; i < syms.size(); ++i) {
        if (i + 1 < syms.size() && syms[i] == left && syms[i + 1] == right) {
          syms[w++] = new_id;
          ++i;
        } else {
          syms[w++] = syms[i];
        }
      }
      syms.resize(w);
      for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
        const auto k = pair_key(syms[i], syms[i + 1]);
        pair_counts[k] += word.count;
        touched.insert(k);
        if (syms[i] == new_id || syms[i + 1] == new_id) pair_words[k].push_back(wi);
      }
    }
    pair_counts.erase(top.key);
    touched.erase(top.key);
    for (const auto k : touched) {
      const auto it = pair_counts.find(k);
      if (it == pair_counts.end()) continue;
      if (it->second <= 0) {
        pair_counts.erase(it);
        continue;
      }
      heap.push({it->second, k});
    }
  }

  return Vocab::from_parts(std::move(pieces), std::move(merges), boundary_);
}

Vocab train_bpe(std::span<const std::string> texts, std::size_t vocab_size, std::string_view boundary) {
  BpeTrainer trainer{std::string(boundary)};
  for (const auto& t : texts) trainer.add_text(t);
  return trainer.train(vocab_size);
}

}  // namespace estcorpus
