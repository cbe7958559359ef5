#pragma once

// Shared helpers and independent oracles for the test binaries. Nothing here
// calls into the library code it is used to check.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

namespace estc_test {

namespace fs = std::filesystem;

inline fs::path fixture(const std::string& name) { return fs::path(ESTC_FIXTURE_DIR) / name; }

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

// Unique scratch directory removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "t") {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("estc-" + tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// Every regular file under `dir`, relative path -> bytes.
inline std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) out[fs::relative(e.path(), dir).string()] = read_file(e.path());
  return out;
}

// Bit-at-a-time CRC-32C (reflected polynomial 0x82F63B78).
inline std::uint32_t crc32c_bitwise(const std::string& bytes) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (unsigned char c : bytes) {
    crc ^= c;
    for (int k = 0; k < 8; ++k) crc = (crc >> 1) ^ (0x82F63B78u & (0u - (crc & 1u)));
  }
  return ~crc;
}

// --- entity spans ---------------------------------------------------------

using Span = std::tuple<std::size_t, std::size_t, std::size_t, std::string>;  // sequence, start, end, type

inline std::string tag_type(const std::string& t) { return t == "O" ? "" : t.substr(2); }

// Enumerates every [s, e) and keeps those that form a chunk: the first tag
// opens a chunk of type T (B-T, or I-T not continuing a T run), the inner
// tags are I-T, and the tag after the span does not continue it.
inline std::set<Span> brute_force_spans(const std::vector<std::vector<std::string>>& seqs) {
  std::set<Span> out;
  for (std::size_t q = 0; q < seqs.size(); ++q) {
    const auto& tags = seqs[q];
    const std::size_t n = tags.size();
    for (std::size_t s = 0; s < n; ++s) {
      if (tags[s] == "O") continue;
      const std::string type = tag_type(tags[s]);
      const bool opens = tags[s][0] == 'B' || s == 0 || tag_type(tags[s - 1]) != type;
      if (!opens) continue;
      for (std::size_t e = s + 1; e <= n; ++e) {
        bool inner = true;
        for (std::size_t k = s + 1; k < e; ++k) inner = inner && tags[k] == "I-" + type;
        if (!inner) break;
        const bool closes = e == n || tags[e] != "I-" + type;
        if (closes) out.emplace(q, s, e, type);
      }
    }
  }
  return out;
}

struct OracleCounts {
  std::uint64_t gold = 0, predicted = 0, correct = 0;
};

struct OracleReport {
  std::map<std::string, OracleCounts> per_type;
  OracleCounts overall;
  std::uint64_t tokens = 0, correct_tags = 0;
};

inline OracleReport brute_force_report(const std::vector<std::vector<std::string>>& gold,
                                       const std::vector<std::vector<std::string>>& pred) {
  OracleReport r;
  const auto g = brute_force_spans(gold);
  const auto p = brute_force_spans(pred);
  for (const auto& s : g) ++r.per_type[std::get<3>(s)].gold, ++r.overall.gold;
  for (const auto& s : p) ++r.per_type[std::get<3>(s)].predicted, ++r.overall.predicted;
  for (const auto& s : g)
    if (p.count(s)) ++r.per_type[std::get<3>(s)].correct, ++r.overall.correct;
  for (std::size_t q = 0; q < gold.size(); ++q)
    for (std::size_t i = 0; i < gold[q].size(); ++i) {
      ++r.tokens;
      if (gold[q][i] == pred[q][i]) ++r.correct_tags;
    }
  return r;
}

// Random IOB2 tag sequences, including I- tags in opening position.
inline std::vector<std::vector<std::string>> random_tag_sequences(std::mt19937_64& rng, std::size_t count,
                                                                  std::size_t max_len) {
  static const std::vector<std::string> tags = {"O", "O", "B-PER", "I-PER", "B-LOC", "I-LOC", "B-ORG", "I-ORG"};
  std::vector<std::vector<std::string>> out(count);
  for (auto& seq : out) {
    const std::size_t n = 1 + rng() % max_len;
    for (std::size_t i = 0; i < n; ++i) seq.push_back(tags[rng() % tags.size()]);
  }
  return out;
}

// --- BPE ------------------------------------------------------------------

// Most frequent adjacent pair over words split into [boundary, code points...];
// ties go to the smaller concatenation, then the smaller left piece.
inline std::pair<std::string, std::string> brute_force_first_merge(const std::vector<std::string>& words,
                                                                   const std::string& boundary) {
  std::map<std::pair<std::string, std::string>, std::uint64_t> counts;
  for (const auto& w : words) {
    std::vector<std::string> syms = {boundary};
    for (std::size_t i = 0; i < w.size();) {
      std::size_t len = 1;
      const auto c = static_cast<unsigned char>(w[i]);
      if (c >= 0xF0) len = 4;
      else if (c >= 0xE0) len = 3;
      else if (c >= 0xC0) len = 2;
      syms.push_back(w.substr(i, len));
      i += len;
    }
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) ++counts[{syms[i], syms[i + 1]}];
  }
  std::pair<std::string, std::string> best;
  std::uint64_t best_n = 0;
  for (const auto& [pair, n] : counts) {
    const auto key = pair.first + pair.second;
    const auto best_key = best.first + best.second;
    if (n > best_n || (n == best_n && (key < best_key || (key == best_key && pair.first < best.first)))) {
      best = pair;
      best_n = n;
    }
  }
  return best;
}

// --- synthetic text --------------------------------------------------------

// Lowercase pseudo-words over a small alphabet; deterministic for a seed.
inline std::string random_sentence(std::mt19937_64& rng, std::size_t min_words, std::size_t max_words) {
  static const std::string letters = "aeioulmnrstkvpdhj";
  std::string s;
  const std::size_t n = min_words + rng() % (max_words - min_words + 1);
  for (std::size_t w = 0; w < n; ++w) {
    if (w) s.push_back(' ');
    const std::size_t len = 1 + rng() % 6;
    for (std::size_t k = 0; k < len; ++k) s.push_back(letters[rng() % letters.size()]);
  }
  return s;
}

}  // namespace estc_test
