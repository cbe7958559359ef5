#include "estcorpus/pipeline.hpp"

#include <cstdlib>
#include <fstream>
#include <optional>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "estcorpus/clean.hpp"
#include "estcorpus/corpus_io.hpp"
#include "estcorpus/error.hpp"
#include "estcorpus/parallel.hpp"
#include "estcorpus/text.hpp"
#include "estcorpus/tfrecord.hpp"

#ifndef ESTCORPUS_DATA_DIR_DEFAULT
#define ESTCORPUS_DATA_DIR_DEFAULT "data"
#endif

namespace estcorpus {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

constexpr std::size_t kBatchPerWorker = 256;

std::string_view format_extension(CorpusFormat f) {
  switch (f) {
    case CorpusFormat::VertXml: return ".xml";
    case CorpusFormat::BlanklineText: return ".txt";
    case CorpusFormat::JsonLines: return ".jsonl";
  }
  return ".txt";
}

// Runs `body` with any core error re-raised under the stage's name.
template <typename Fn>
auto in_stage(std::string_view stage, Fn&& body) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(std::string(stage), e);
  } catch (const std::exception& e) {
    throw StageError(std::string(stage), Error(ErrorCode::Internal, e.what()));
  }
}

ojson stats_json(const CorpusStats& s) {
  ojson j;
  j["documents"] = s.documents;
  j["sentences"] = s.sentences;
  j["words"] = s.words;
  return j;
}

ojson counts_json(const std::map<std::string, std::uint64_t>& m) {
  ojson j = ojson::object();
  for (const auto& [k, v] : m) j[k] = v;
  return j;
}

std::string relative_to(const fs::path& p, const fs::path& base) {
  const auto rel = p.lexically_relative(base);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return p.generic_string();
}

class DropLog {
 public:
  explicit DropLog(const fs::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error(ErrorCode::IoError, fmt::format("cannot open '{}' for writing", path.string()));
  }

  void record(const Document& doc, std::string_view stage, const DropReason& reason) {
    ojson j;
    j["id"] = doc.id;
    j["stage"] = stage;
    j["reason"] = drop_kind_name(reason.kind);
    j["detail"] = reason.detail;
    out_ << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
  }

  void close() {
    out_.close();
    if (out_.fail()) throw Error(ErrorCode::IoError, "writing the drop log failed");
  }

 private:
  std::ofstream out_;
};

// Removes the documents with a verdict, logging each drop.
void apply_verdicts(std::vector<Document>& docs, const std::vector<FilterVerdict>& verdicts, StageReport& report,
                    DropLog& log) {
  std::size_t out = 0;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    if (verdicts[i]) {
      log.record(docs[i], report.stage, *verdicts[i]);
      ++report.drops[std::string(drop_kind_name(verdicts[i]->kind))];
      continue;
    }
    if (out != i) docs[out] = std::move(docs[i]);
    ++out;
  }
  docs.resize(out);
}

bool lemmas_aligned(const Document& doc) {
  return doc.lemmas && doc.lemmas->size() == text::count_words(doc.text);
}

// Pulls batches from the configured inputs in order.
class BatchSource {
 public:
  BatchSource(const std::vector<fs::path>& paths, CorpusFormat format) : paths_(paths), format_(format) {}

  bool next(std::vector<Document>& batch, std::size_t size) {
    batch.clear();
    while (batch.size() < size) {
      if (!reader_) {
        if (index_ >= paths_.size()) break;
        reader_.emplace(paths_[index_++], format_);
      }
      auto doc = reader_->next();
      if (!doc) {
        reader_.reset();
        continue;
      }
      batch.push_back(std::move(*doc));
    }
    return !batch.empty();
  }

 private:
  const std::vector<fs::path>& paths_;
  CorpusFormat format_;
  std::size_t index_ = 0;
  std::optional<DocumentReader> reader_;
};

}  // namespace

fs::path default_data_dir() {
  if (const char* env = std::getenv("ESTCORPUS_DATA_DIR"); env && *env) return env;
  return ESTCORPUS_DATA_DIR_DEFAULT;
}

std::vector<TokenizedDocument> tokenize_corpus(const fs::path& path, CorpusFormat format, const Vocab& vocab) {
  std::vector<TokenizedDocument> docs;
  for_each_document(path, format, [&](Document&& doc) {
    auto t = tokenize_document(doc, vocab);
    if (!t.sentences.empty()) docs.push_back(std::move(t));
  });
  return docs;
}

ExampleSummary make_examples(std::span<const TokenizedDocument> docs, const Vocab& vocab,
                             const GenerationConfig& config, const fs::path& out_dir, unsigned workers) {
  config.validate();
  ShardedExampleWriter writer(out_dir, config.shards);
  const auto budget = config.budget();
  std::uint64_t total = 0;
  generate_instances(docs, vocab, config, workers, [&](PretrainingInstance&& inst) {
    check_instance(inst, config.max_seq_length, budget);
    writer.write(serialize_example(inst, vocab, config));
    ++total;
  });
  ExampleSummary summary;
  summary.shard_sizes = writer.counts();
  summary.shards = writer.finish();
  summary.examples = total;
  summary.documents = docs.size();
  return summary;
}

PipelineReport run_pipeline(const PipelineConfig& config, unsigned workers) {
  if (auto diags = check_config(config); !diags.empty())
    throw Error(ErrorCode::ConfigError, diags.front().message);
  workers = std::max(1u, workers);
  const std::size_t batch_size = kBatchPerWorker * workers;
  const auto& stages = config.stages;
  const fs::path out_dir = config.output_dir;
  const CorpusFormat out_format = config.output_format.value_or(config.input_format);

  PipelineReport report;
  report.output_dir = out_dir;
  in_stage("output", [&] {
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw Error(ErrorCode::IoError, fmt::format("cannot create '{}': {}", out_dir.string(), ec.message()));
  });

  // Stage set-up happens before any document is read so that configuration
  // problems surface under the stage they belong to.
  LanguageProfiles profiles;
  if (stages.langfilter)
    in_stage("langfilter", [&] {
      profiles = LanguageProfiles::load_directory(config.profiles_dir.empty() ? default_data_dir() / "langprofiles"
                                                                              : config.profiles_dir);
    });
  FilterThresholds thresholds = config.thresholds;
  if (stages.heuristics)
    in_stage("heuristics", [&] {
      thresholds.validate();
      if (thresholds.stopwords.empty())
        thresholds.stopwords = load_stopwords(
            config.stopwords_file.empty() ? default_data_dir() / "stopwords-et.txt" : config.stopwords_file);
    });
  CasingLexicon lexicon;
  const bool build_lexicon = stages.truecase && config.lexicon_file.empty();
  if (stages.truecase && !build_lexicon)
    in_stage("truecase", [&] { lexicon = CasingLexicon::load_tsv(config.lexicon_file); });

  std::vector<StageReport> reports;
  auto add_stage = [&](std::string name) -> std::size_t {
    reports.push_back(StageReport{std::move(name), {}, {}, {}});
    return reports.size() - 1;
  };
  const std::size_t ingest = add_stage("ingest");
  const std::optional<std::size_t> strip = stages.strip ? std::optional(add_stage("strip")) : std::nullopt;
  const auto langfilter = stages.langfilter ? std::optional(add_stage("langfilter")) : std::nullopt;
  const auto dedup_stage = stages.dedup ? std::optional(add_stage("dedup")) : std::nullopt;
  const auto heuristics = stages.heuristics ? std::optional(add_stage("heuristics")) : std::nullopt;
  const auto truecase_stage = stages.truecase ? std::optional(add_stage("truecase")) : std::nullopt;

  const fs::path drops_path = out_dir / "drops.jsonl";
  const fs::path staging_path = out_dir / ".filtered.partial.jsonl";
  const fs::path corpus_path =
      config.corpus_file.empty() ? out_dir / fmt::format("corpus{}", format_extension(out_format)) : config.corpus_file;

  // Pass 1: ingest, strip, langfilter, dedup, heuristics -> staging file.
  DropLog drops = in_stage("output", [&] { return DropLog(drops_path); });
  std::uint64_t evidence_docs = 0;
  std::uint64_t staged_docs = 0;
  {
    BatchSource source(config.inputs, config.input_format);
    DocumentWriter staging = in_stage("output", [&] { return DocumentWriter(staging_path, CorpusFormat::JsonLines); });
    Deduplicator seen;
    std::vector<Document> batch;
    std::vector<FilterVerdict> verdicts;
    std::vector<Digest128> keys;
    while (in_stage("ingest", [&] { return source.next(batch, batch_size); })) {
      const CorpusStats raw = compute_stats(batch);
      reports[ingest].input += raw;
      reports[ingest].kept += raw;
      if (strip) {
        auto& rep = reports[*strip];
        rep.input += compute_stats(batch);
        in_stage("strip", [&] {
          parallel_for(batch.size(), workers, [&](std::size_t i) { batch[i].text = strip_markup(batch[i].text); });
        });
        rep.kept += compute_stats(batch);
      }
      if (langfilter) {
        auto& rep = reports[*langfilter];
        rep.input += compute_stats(batch);
        verdicts.assign(batch.size(), std::nullopt);
        in_stage("langfilter", [&] {
          parallel_for(batch.size(), workers, [&](std::size_t i) {
            verdicts[i] = language_filter(batch[i], profiles, config.target_lang, thresholds.lang_confidence_min);
          });
        });
        apply_verdicts(batch, verdicts, rep, drops);
        rep.kept += compute_stats(batch);
      }
      if (dedup_stage) {
        auto& rep = reports[*dedup_stage];
        rep.input += compute_stats(batch);
        keys.assign(batch.size(), Digest128{});
        in_stage("dedup", [&] {
          parallel_for(batch.size(), workers, [&](std::size_t i) { keys[i] = dedup_key(batch[i].text); });
        });
        verdicts.assign(batch.size(), std::nullopt);
        for (std::size_t i = 0; i < batch.size(); ++i)
          if (!seen.insert(keys[i])) verdicts[i] = DropReason{DropKind::Duplicate, 0.0};
        apply_verdicts(batch, verdicts, rep, drops);
        rep.kept += compute_stats(batch);
      }
      if (heuristics) {
        auto& rep = reports[*heuristics];
        rep.input += compute_stats(batch);
        verdicts.assign(batch.size(), std::nullopt);
        in_stage("heuristics", [&] {
          parallel_for(batch.size(), workers,
                       [&](std::size_t i) { verdicts[i] = heuristic_filter(batch[i], thresholds); });
        });
        apply_verdicts(batch, verdicts, rep, drops);
        rep.kept += compute_stats(batch);
      }
      if (build_lexicon)
        in_stage("truecase", [&] {
          for (const auto& doc : batch)
            if (lemmas_aligned(doc)) {
              add_casing_evidence(lexicon, doc);
              ++evidence_docs;
            }
        });
      in_stage("output", [&] {
        for (const auto& doc : batch) staging.write(doc);
      });
      staged_docs += batch.size();
    }
    in_stage("output", [&] {
      staging.finish();
      drops.close();
    });
  }

  // Pass 2: truecase, write the cleaned corpus, count words for BPE.
  if (build_lexicon)
    in_stage("truecase", [&] {
      if (evidence_docs == 0 && staged_docs > 0)
        throw Error(ErrorCode::MissingLemmas,
                    "no document carries lemma annotations aligned with its tokens; supply a casing lexicon");
      lexicon.save_tsv(out_dir / "lexicon.tsv");
      report.artifacts["lexicon"] = out_dir / "lexicon.tsv";
    });
  BpeTrainer trainer;
  {
    DocumentReader staged = in_stage("output", [&] { return DocumentReader(staging_path, CorpusFormat::JsonLines); });
    DocumentWriter cleaned = in_stage("output", [&] { return DocumentWriter(corpus_path, out_format); });
    std::vector<Document> batch;
    for (;;) {
      batch.clear();
      in_stage("output", [&] {
        while (batch.size() < batch_size) {
          auto doc = staged.next();
          if (!doc) break;
          batch.push_back(std::move(*doc));
        }
      });
      if (batch.empty()) break;
      if (truecase_stage) {
        auto& rep = reports[*truecase_stage];
        rep.input += compute_stats(batch);
        in_stage("truecase", [&] {
          parallel_for(batch.size(), workers, [&](std::size_t i) { batch[i] = truecase(std::move(batch[i]), lexicon); });
        });
        rep.kept += compute_stats(batch);
      }
      in_stage("output", [&] {
        for (const auto& doc : batch) cleaned.write(doc);
      });
      if (stages.bpe)
        for (const auto& doc : batch) trainer.add_text(doc.text);
    }
    in_stage("output", [&] { cleaned.finish(); });
  }
  std::error_code ec;
  fs::remove(staging_path, ec);
  report.artifacts["corpus"] = corpus_path;
  report.artifacts["drops"] = drops_path;

  report.stages = std::move(reports);
  report.before = report.stages.front().input;
  report.after = report.stages.back().kept;
  for (const auto& s : report.stages)
    for (const auto& [k, v] : s.drops) report.drops[k] += v;

  // Vocabulary and pretraining examples.
  std::optional<Vocab> vocab;
  if (stages.bpe) {
    in_stage("bpe", [&] {
      vocab = trainer.train(config.vocab_size);
      vocab->save(out_dir / "vocab.txt", out_dir / "merges.txt");
    });
    report.artifacts["vocab"] = out_dir / "vocab.txt";
    report.artifacts["merges"] = out_dir / "merges.txt";
  } else if (stages.examples) {
    in_stage("bpe", [&] { vocab = Vocab::load(config.vocab_file, config.merges_file); });
  }
  if (vocab) report.vocab_size = vocab->size();
  if (stages.examples) {
    in_stage("examples", [&] {
      const auto docs = tokenize_corpus(corpus_path, out_format, *vocab);
      report.examples = make_examples(docs, *vocab, config.generation, out_dir, workers);
    });
  }

  for (auto& [name, path] : report.artifacts) path = relative_to(path, out_dir);
  for (auto& shard : report.examples.shards) shard = relative_to(shard, out_dir);

  const fs::path report_path = config.report_file.empty() ? out_dir / "report.jsonl" : config.report_file;
  in_stage("output", [&] {
    std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
    out << report_jsonl(report);
    if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot write report '{}'", report_path.string()));
  });
  return report;
}

std::string report_jsonl(const PipelineReport& r) {
  std::string out;
  auto emit = [&](const ojson& j) { out += j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) + "\n"; };
  for (const auto& s : r.stages) {
    ojson j;
    j["record"] = "stage";
    j["stage"] = s.stage;
    j["input"] = stats_json(s.input);
    j["kept"] = stats_json(s.kept);
    j["drops"] = counts_json(s.drops);
    emit(j);
  }
  ojson summary;
  summary["record"] = "summary";
  summary["before"] = stats_json(r.before);
  summary["after"] = stats_json(r.after);
  summary["drops"] = counts_json(r.drops);
  emit(summary);
  ojson artifacts;
  artifacts["record"] = "artifacts";
  for (const auto& [name, path] : r.artifacts) artifacts[name] = path.generic_string();
  if (r.vocab_size) artifacts["vocab_size"] = r.vocab_size;
  if (!r.examples.shards.empty()) {
    ojson shards = ojson::array();
    for (const auto& p : r.examples.shards) shards.push_back(p.generic_string());
    artifacts["shards"] = shards;
    artifacts["shard_sizes"] = r.examples.shard_sizes;
    artifacts["examples"] = r.examples.examples;
  }
  emit(artifacts);
  return out;
}

std::string report_table(const PipelineReport& r) {
  std::string out = fmt::format("{:<12}{:>14}{:>14}\n", "", "before", "after");
  out += fmt::format("{:<12}{:>14}{:>14}\n", "documents", r.before.documents, r.after.documents);
  out += fmt::format("{:<12}{:>14}{:>14}\n", "sentences", r.before.sentences, r.after.sentences);
  out += fmt::format("{:<12}{:>14}{:>14}\n", "words", r.before.words, r.after.words);
  out += "\n";
  out += fmt::format("{:<12}{:>10}{:>10}{:>12}{:>12}  {}\n", "stage", "docs in", "kept", "words in", "kept", "drops");
  for (const auto& s : r.stages) {
    std::string drops;
    for (const auto& [k, v] : s.drops) drops += fmt::format("{}{}={}", drops.empty() ? "" : " ", k, v);
    out += fmt::format("{:<12}{:>10}{:>10}{:>12}{:>12}  {}\n", s.stage, s.input.documents, s.kept.documents,
                       s.input.words, s.kept.words, drops.empty() ? "-" : drops);
  }
  if (r.vocab_size) out += fmt::format("\nvocabulary: {} pieces\n", r.vocab_size);
  if (!r.examples.shards.empty()) {
    std::string sizes;
    for (auto n : r.examples.shard_sizes) sizes += fmt::format("{}{}", sizes.empty() ? "" : ",", n);
    out += fmt::format("examples: {} in {} shards ({})\n", r.examples.examples, r.examples.shards.size(), sizes);
  }
  return out;
}

}  // namespace estcorpus
