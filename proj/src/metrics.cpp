#include "estcorpus/metrics.hpp"

#include <fstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "estcorpus/error.hpp"
#include "estcorpus/text.hpp"

namespace estcorpus {

namespace {

struct ParsedTag {
  char prefix;  // 'B', 'I' or 'O'
  std::string_view type;
};

ParsedTag parse_tag(std::string_view tag) {
  if (tag == "O") return {'O', {}};
  if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') && tag[1] == '-') return {tag[0], tag.substr(2)};
  throw Error(ErrorCode::MalformedTag, fmt::format("malformed tag '{}'", tag));
}

// conlleval chunk boundary rules restricted to IOB2 tags.
bool chunk_ends(const ParsedTag& prev, const ParsedTag& cur) {
  if (prev.prefix == 'O') return false;
  return cur.prefix != 'I' || prev.type != cur.type;
}

bool chunk_starts(const ParsedTag& prev, const ParsedTag& cur) {
  if (cur.prefix == 'O') return false;
  return cur.prefix == 'B' || prev.prefix == 'O' || prev.type != cur.type;
}

void check_aligned(std::span<const TagSequence> gold, std::span<const TagSequence> pred) {
  if (gold.size() != pred.size())
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("{} gold sequences but {} predicted", gold.size(), pred.size()));
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (gold[i].size() != pred[i].size())
      throw Error(ErrorCode::LengthMismatch,
                  fmt::format("sequence {}: {} gold tags but {} predicted", i, gold[i].size(), pred[i].size()));
}

double percent(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

double tagging_accuracy(std::span<const TagSequence> gold, std::span<const TagSequence> pred) {
  check_aligned(gold, pred);
  std::uint64_t total = 0;
  std::uint64_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i)
    for (std::size_t j = 0; j < gold[i].size(); ++j) {
      ++total;
      if (gold[i][j] == pred[i][j]) ++correct;
    }
  if (total == 0) throw Error(ErrorCode::EmptyInput, "no tokens to score");
  return static_cast<double>(correct) / static_cast<double>(total);
}

double classification_accuracy(std::span<const std::string> gold, std::span<const std::string> pred) {
  if (gold.size() != pred.size())
    throw Error(ErrorCode::LengthMismatch, fmt::format("{} gold labels but {} predicted", gold.size(), pred.size()));
  if (gold.empty()) throw Error(ErrorCode::EmptyInput, "no labels to score");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < gold.size(); ++i)
    if (gold[i] == pred[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(gold.size());
}

double SpanCounts::precision() const noexcept { return percent(correct, predicted); }
double SpanCounts::recall() const noexcept { return percent(correct, gold); }
double SpanCounts::f1() const noexcept {
  const double p = precision();
  const double r = recall();
  return p + r > 0 ? 2 * p * r / (p + r) : 0.0;
}

double SpanF1Report::token_accuracy() const noexcept { return percent(correct_tags, tokens); }

SpanF1Report ner_span_f1(std::span<const TagSequence> gold, std::span<const TagSequence> pred) {
  check_aligned(gold, pred);
  SpanF1Report report;
  const ParsedTag outside{'O', {}};
  for (std::size_t s = 0; s < gold.size(); ++s) {
    ParsedTag last_gold = outside;
    ParsedTag last_pred = outside;
    bool in_correct = false;
    // One extra step with O/O closes chunks at the sequence boundary.
    for (std::size_t t = 0; t <= gold[s].size(); ++t) {
      const bool boundary = t == gold[s].size();
      const ParsedTag g = boundary ? outside : parse_tag(gold[s][t]);
      const ParsedTag p = boundary ? outside : parse_tag(pred[s][t]);
      const bool end_g = chunk_ends(last_gold, g);
      const bool end_p = chunk_ends(last_pred, p);
      const bool start_g = chunk_starts(last_gold, g);
      const bool start_p = chunk_starts(last_pred, p);
      if (in_correct) {
        if (end_g && end_p && last_gold.type == last_pred.type) {
          in_correct = false;
          ++report.per_type[std::string(last_gold.type)].correct;
        } else if (end_g != end_p || g.type != p.type) {
          in_correct = false;
        }
      }
      if (start_g && start_p && g.type == p.type) in_correct = true;
      if (start_g) ++report.per_type[std::string(g.type)].gold;
      if (start_p) ++report.per_type[std::string(p.type)].predicted;
      if (!boundary) {
        ++report.tokens;
        if (gold[s][t] == pred[s][t]) ++report.correct_tags;
      }
      last_gold = g;
      last_pred = p;
    }
  }
  for (const auto& [type, c] : report.per_type) {
    report.overall.gold += c.gold;
    report.overall.predicted += c.predicted;
    report.overall.correct += c.correct;
  }
  return report;
}

std::string conlleval_report(const SpanF1Report& r) {
  std::string out = fmt::format("processed {} tokens with {} phrases; found: {} phrases; correct: {}.\n", r.tokens,
                                r.overall.gold, r.overall.predicted, r.overall.correct);
  if (r.tokens > 0) out += fmt::format("accuracy: {:6.2f}%; ", r.token_accuracy());
  out += fmt::format("precision: {:6.2f}%; recall: {:6.2f}%; FB1: {:6.2f}\n", r.overall.precision(),
                     r.overall.recall(), r.overall.f1());
  for (const auto& [type, c] : r.per_type)
    out += fmt::format("{:>17}: precision: {:6.2f}%; recall: {:6.2f}%; FB1: {:6.2f}  {}\n", type, c.precision(),
                       c.recall(), c.f1(), c.predicted);
  return out;
}

std::string span_report_jsonl(const SpanF1Report& r) {
  auto line = [](std::string_view type, const SpanCounts& c) {
    nlohmann::ordered_json j;
    j["type"] = type;
    j["gold"] = c.gold;
    j["predicted"] = c.predicted;
    j["correct"] = c.correct;
    j["precision"] = c.precision();
    j["recall"] = c.recall();
    j["f1"] = c.f1();
    return j.dump() + "\n";
  };
  std::string out;
  for (const auto& [type, c] : r.per_type) out += line(type, c);
  out += line("overall", r.overall);
  return out;
}

ColumnFile read_column_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, fmt::format("cannot open '{}'", path.string()));
  ColumnFile file;
  bool open = false;
  auto close = [&] { open = false; };
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = text::split_words(line);
    if (fields.empty() || fields[0] == "-DOCSTART-") {
      close();
      continue;
    }
    if (fields.size() < 3)
      throw MalformedRecordError(line_no, fmt::format("expected token, gold and predicted columns, got {}",
                                                      fields.size()));
    if (!open) {
      file.tokens.emplace_back();
      file.gold.emplace_back();
      file.pred.emplace_back();
      open = true;
    }
    file.tokens.back().emplace_back(fields.front());
    file.gold.back().emplace_back(fields[fields.size() - 2]);
    file.pred.back().emplace_back(fields.back());
  }
  return file;
}

LabelPairs read_label_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::UnreadableFile, fmt::format("cannot open '{}'", path.string()));
  LabelPairs pairs;
  std::string line;
  std::uint64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto fields = text::split_words(line);
    if (fields.empty()) continue;
    if (fields.size() != 2)
      throw MalformedRecordError(line_no, fmt::format("expected gold and predicted label, got {} fields", fields.size()));
    pairs.gold.emplace_back(fields[0]);
    pairs.pred.emplace_back(fields[1]);
  }
  return pairs;
}

}  // namespace estcorpus
