#include "estcorpus/estcorpus.h"

#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "estcorpus/clean.hpp"
#include "estcorpus/config.hpp"
#include "estcorpus/corpus_io.hpp"
#include "estcorpus/error.hpp"
#include "estcorpus/metrics.hpp"
#include "estcorpus/pipeline.hpp"
#include "estcorpus/tfrecord.hpp"

namespace ec = estcorpus;
namespace fs = std::filesystem;

struct estc_config {
  ec::PipelineConfig value;
};
struct estc_report {
  ec::PipelineReport value;
};
struct estc_vocab {
  ec::Vocab value;
};
struct estc_profiles {
  ec::LanguageProfiles value;
};
struct estc_example_reader {
  std::vector<std::unique_ptr<ec::TFRecordReader>> readers;
  std::vector<bool> live;
  std::size_t cursor = 0;
  std::size_t remaining = 0;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_stage;

void set_error(std::string message, std::string stage = {}) {
  g_last_error = std::move(message);
  g_last_stage = std::move(stage);
}

template <typename Fn>
estc_status guarded(Fn&& body) {
  try {
    body();
    set_error({});
    return ESTC_OK;
  } catch (const ec::StageError& e) {
    set_error(e.what(), e.stage());
    return static_cast<estc_status>(e.code());
  } catch (const ec::Error& e) {
    set_error(e.what());
    return static_cast<estc_status>(e.code());
  } catch (const std::bad_alloc&) {
    set_error("out of memory");
    return ESTC_INTERNAL;
  } catch (const std::exception& e) {
    set_error(e.what());
    return ESTC_INTERNAL;
  } catch (...) {
    set_error("unknown failure");
    return ESTC_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw ec::Error(ec::ErrorCode::InvalidArgument, what);
}

char* dup_string(std::string_view s) {
  auto* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.data(), s.size());
  p[s.size()] = '\0';
  return p;
}

nlohmann::ordered_json example_json(const ec::SerializedExample& ex) {
  nlohmann::ordered_json j;
  j["input_ids"] = ex.input_ids;
  j["input_mask"] = ex.input_mask;
  j["segment_ids"] = ex.segment_ids;
  j["masked_lm_positions"] = ex.masked_lm_positions;
  j["masked_lm_ids"] = ex.masked_lm_ids;
  j["masked_lm_weights"] = ex.masked_lm_weights;
  j["next_sentence_labels"] = ex.next_sentence_label;
  return j;
}

std::string path_or_default(const fs::path& p) { return p.empty() ? std::string() : p.generic_string(); }

}  // namespace

extern "C" {

const char* estc_last_error(void) { return g_last_error.c_str(); }
const char* estc_last_error_stage(void) { return g_last_stage.c_str(); }

const char* estc_status_name(estc_status status) {
  if (status == ESTC_OK) return "Ok";
  return ec::error_code_name(static_cast<ec::ErrorCode>(status)).data();
}

const char* estc_version(void) { return ESTC_VERSION_STRING; }

void estc_free(void* ptr) { std::free(ptr); }

estc_status estc_config_new(estc_config** out) {
  return guarded([&] {
    require(out, "out must not be NULL");
    *out = new estc_config{};
  });
}

estc_status estc_config_load(const char* path, estc_config** out) {
  return guarded([&] {
    require(path && out, "path and out must not be NULL");
    *out = nullptr;
    auto result = ec::validate_config(path);
    if (!result.config) {
      std::string msg;
      for (const auto& d : result.diagnostics) {
        if (!msg.empty()) msg += '\n';
        msg += d.to_string(path);
      }
      throw ec::Error(ec::ErrorCode::ConfigError, msg);
    }
    *out = new estc_config{std::move(*result.config)};
  });
}

estc_status estc_config_set(estc_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config && key && value, "config, key and value must not be NULL");
    if (auto diag = ec::apply_override(config->value, key, value))
      throw ec::Error(ec::ErrorCode::ConfigError, diag->message);
  });
}

estc_status estc_config_check(const estc_config* config) {
  return guarded([&] {
    require(config, "config must not be NULL");
    const auto diags = ec::check_config(config->value);
    if (!diags.empty()) {
      std::string msg;
      for (const auto& d : diags) msg += (msg.empty() ? "" : "\n") + d.message;
      throw ec::Error(ec::ErrorCode::ConfigError, msg);
    }
  });
}

estc_status estc_config_dump(const estc_config* config, char** out_json) {
  return guarded([&] {
    require(config && out_json, "config and out_json must not be NULL");
    const auto& c = config->value;
    nlohmann::ordered_json j;
    std::vector<std::string> inputs;
    for (const auto& p : c.inputs) inputs.push_back(p.generic_string());
    j["input"] = {{"paths", inputs}, {"format", ec::corpus_format_name(c.input_format)}};
    j["stages"] = {{"strip", c.stages.strip},           {"langfilter", c.stages.langfilter},
                   {"dedup", c.stages.dedup},           {"heuristics", c.stages.heuristics},
                   {"truecase", c.stages.truecase},     {"bpe", c.stages.bpe},
                   {"examples", c.stages.examples}};
    j["filter"] = {{"min_words", c.thresholds.min_words},
                   {"max_stopword_ratio", c.thresholds.max_stopword_ratio},
                   {"max_punct_ratio", c.thresholds.max_punct_ratio},
                   {"lang_confidence_min", c.thresholds.lang_confidence_min},
                   {"stopwords", path_or_default(c.stopwords_file)},
                   {"target_lang", c.target_lang},
                   {"profiles", path_or_default(c.profiles_dir)}};
    j["truecase"] = {{"lexicon", path_or_default(c.lexicon_file)}};
    j["bpe"] = {{"vocab_size", c.vocab_size},
                {"vocab_file", path_or_default(c.vocab_file)},
                {"merges_file", path_or_default(c.merges_file)}};
    const auto& g = c.generation;
    j["pretrain"] = {{"max_seq_length", g.max_seq_length}, {"masked_lm_prob", g.masked_lm_prob},
                     {"random_next_prob", g.random_next_prob}, {"short_seq_prob", g.short_seq_prob},
                     {"dupe_factor", g.dupe_factor},       {"shards", g.shards},
                     {"seed", g.seed},                     {"max_predictions_per_seq", g.budget()}};
    j["output"] = {{"dir", c.output_dir.generic_string()},
                   {"report", path_or_default(c.report_file)},
                   {"corpus", path_or_default(c.corpus_file)},
                   {"format", c.output_format ? std::string(ec::corpus_format_name(*c.output_format)) : ""}};
    *out_json = dup_string(j.dump());
  });
}

void estc_config_free(estc_config* config) { delete config; }

estc_status estc_run_pipeline(const estc_config* config, unsigned workers, estc_report** out) {
  return guarded([&] {
    require(config && out, "config and out must not be NULL");
    *out = nullptr;
    *out = new estc_report{ec::run_pipeline(config->value, workers)};
  });
}

estc_status estc_report_jsonl(const estc_report* report, char** out) {
  return guarded([&] {
    require(report && out, "report and out must not be NULL");
    *out = dup_string(ec::report_jsonl(report->value));
  });
}

estc_status estc_report_table(const estc_report* report, char** out) {
  return guarded([&] {
    require(report && out, "report and out must not be NULL");
    *out = dup_string(ec::report_table(report->value));
  });
}

estc_status estc_report_stats(const estc_report* report, estc_corpus_stats* before, estc_corpus_stats* after) {
  return guarded([&] {
    require(report, "report must not be NULL");
    if (before) *before = {report->value.before.documents, report->value.before.sentences, report->value.before.words};
    if (after) *after = {report->value.after.documents, report->value.after.sentences, report->value.after.words};
  });
}

void estc_report_free(estc_report* report) { delete report; }

estc_status estc_corpus_stats_file(const char* path, const char* format, estc_corpus_stats* out) {
  return guarded([&] {
    require(path && format && out, "path, format and out must not be NULL");
    const auto s = ec::compute_file_stats(path, ec::parse_corpus_format(format));
    *out = {s.documents, s.sentences, s.words};
  });
}

estc_status estc_strip_markup(const char* text, char** out) {
  return guarded([&] {
    require(text && out, "text and out must not be NULL");
    *out = dup_string(ec::strip_markup(text));
  });
}

estc_status estc_dedup_key(const char* text, char** out_hex) {
  return guarded([&] {
    require(text && out_hex, "text and out_hex must not be NULL");
    *out_hex = dup_string(ec::dedup_key(text).hex());
  });
}

estc_status estc_masked_budget(uint32_t max_seq_length, double masked_lm_prob, uint32_t* out) {
  return guarded([&] {
    require(out, "out must not be NULL");
    require(max_seq_length >= 1, "max_seq_length must be >= 1");
    require(masked_lm_prob >= 0.0 && masked_lm_prob <= 1.0, "masked_lm_prob must lie in [0,1]");
    *out = ec::masked_budget(max_seq_length, masked_lm_prob);
  });
}

uint32_t estc_crc32c(const void* data, size_t size) {
  return ec::crc32c(std::string_view(static_cast<const char*>(data), data ? size : 0));
}

uint32_t estc_mask_crc(uint32_t crc) { return ec::mask_crc(crc); }

estc_status estc_profiles_load(const char* dir, estc_profiles** out) {
  return guarded([&] {
    require(out, "out must not be NULL");
    *out = nullptr;
    const fs::path path = dir ? fs::path(dir) : ec::default_data_dir() / "langprofiles";
    *out = new estc_profiles{ec::LanguageProfiles::load_directory(path)};
  });
}

estc_status estc_detect_language(const estc_profiles* profiles, const char* text, char** out_lang,
                                 double* out_probability) {
  return guarded([&] {
    require(profiles && text && out_lang, "profiles, text and out_lang must not be NULL");
    const auto guess = ec::detect_language(text, profiles->value);
    *out_lang = dup_string(guess.lang);
    if (out_probability) *out_probability = guess.probability;
  });
}

void estc_profiles_free(estc_profiles* profiles) { delete profiles; }

estc_status estc_vocab_train(const char* corpus_path, const char* format, uint32_t vocab_size, estc_vocab** out) {
  return guarded([&] {
    require(corpus_path && format && out, "corpus_path, format and out must not be NULL");
    *out = nullptr;
    ec::BpeTrainer trainer;
    ec::for_each_document(corpus_path, ec::parse_corpus_format(format),
                          [&](ec::Document&& doc) { trainer.add_text(doc.text); });
    *out = new estc_vocab{trainer.train(vocab_size)};
  });
}

estc_status estc_vocab_load(const char* vocab_path, const char* merges_path, estc_vocab** out) {
  return guarded([&] {
    require(vocab_path && merges_path && out, "paths and out must not be NULL");
    *out = nullptr;
    *out = new estc_vocab{ec::Vocab::load(vocab_path, merges_path)};
  });
}

estc_status estc_vocab_save(const estc_vocab* vocab, const char* vocab_path, const char* merges_path) {
  return guarded([&] {
    require(vocab && vocab_path && merges_path, "vocab and paths must not be NULL");
    vocab->value.save(vocab_path, merges_path);
  });
}

size_t estc_vocab_size(const estc_vocab* vocab) { return vocab ? vocab->value.size() : 0; }

estc_status estc_vocab_encode(const estc_vocab* vocab, const char* text, int32_t** out_ids, size_t* out_count) {
  return guarded([&] {
    require(vocab && text && out_ids && out_count, "arguments must not be NULL");
    const auto ids = vocab->value.encode(text);
    auto* buf = static_cast<int32_t*>(std::malloc(std::max<std::size_t>(1, ids.size()) * sizeof(int32_t)));
    if (!buf) throw std::bad_alloc();
    std::copy(ids.begin(), ids.end(), buf);
    *out_ids = buf;
    *out_count = ids.size();
  });
}

estc_status estc_vocab_encode_pieces(const estc_vocab* vocab, const char* text, char** out) {
  return guarded([&] {
    require(vocab && text && out, "arguments must not be NULL");
    std::string joined;
    for (const auto& p : vocab->value.encode_pieces(text)) {
      if (!joined.empty()) joined += ' ';
      joined += p;
    }
    *out = dup_string(joined);
  });
}

estc_status estc_vocab_decode(const estc_vocab* vocab, const int32_t* ids, size_t count, char** out) {
  return guarded([&] {
    require(vocab && out && (ids || count == 0), "arguments must not be NULL");
    *out = dup_string(vocab->value.decode(std::span<const int32_t>(ids, count)));
  });
}

void estc_vocab_free(estc_vocab* vocab) { delete vocab; }

estc_status estc_make_examples(const char* corpus_path, const char* format, const estc_vocab* vocab,
                               const estc_config* config, const char* out_dir, unsigned workers,
                               char** out_summary_json) {
  return guarded([&] {
    require(corpus_path && format && vocab && config && out_dir, "arguments must not be NULL");
    const auto docs = ec::tokenize_corpus(corpus_path, ec::parse_corpus_format(format), vocab->value);
    const auto summary = ec::make_examples(docs, vocab->value, config->value.generation, out_dir, workers);
    if (out_summary_json) {
      nlohmann::ordered_json j;
      std::vector<std::string> shards;
      for (const auto& p : summary.shards) shards.push_back(p.generic_string());
      j["documents"] = summary.documents;
      j["examples"] = summary.examples;
      j["shards"] = shards;
      j["shard_sizes"] = summary.shard_sizes;
      *out_summary_json = dup_string(j.dump());
    }
  });
}

estc_status estc_examples_open(const char* const* paths, size_t count, estc_example_reader** out) {
  return guarded([&] {
    require(out && (paths || count == 0), "arguments must not be NULL");
    *out = nullptr;
    auto reader = std::make_unique<estc_example_reader>();
    for (size_t i = 0; i < count; ++i) {
      require(paths[i], "path must not be NULL");
      reader->readers.push_back(std::make_unique<ec::TFRecordReader>(paths[i]));
    }
    reader->live.assign(count, true);
    reader->remaining = count;
    *out = reader.release();
  });
}

estc_status estc_examples_next(estc_example_reader* reader, char** out_json) {
  return guarded([&] {
    require(reader && out_json, "reader and out_json must not be NULL");
    *out_json = nullptr;
    while (reader->remaining > 0) {
      const std::size_t i = reader->cursor;
      reader->cursor = (reader->cursor + 1) % reader->readers.size();
      if (!reader->live[i]) continue;
      auto rec = reader->readers[i]->next();
      if (!rec) {
        reader->live[i] = false;
        --reader->remaining;
        continue;
      }
      *out_json = dup_string(example_json(ec::decode_example(*rec)).dump());
      return;
    }
  });
}

void estc_examples_close(estc_example_reader* reader) { delete reader; }

estc_status estc_score_tags_file(const char* path, double* out_accuracy) {
  return guarded([&] {
    require(path && out_accuracy, "path and out_accuracy must not be NULL");
    const auto file = ec::read_column_file(path);
    *out_accuracy = ec::tagging_accuracy(file.gold, file.pred);
  });
}

estc_status estc_score_ner_file(const char* path, char** out_text_report, char** out_jsonl_report) {
  return guarded([&] {
    require(path, "path must not be NULL");
    const auto file = ec::read_column_file(path);
    const auto report = ec::ner_span_f1(file.gold, file.pred);
    if (out_text_report) *out_text_report = dup_string(ec::conlleval_report(report));
    if (out_jsonl_report) *out_jsonl_report = dup_string(ec::span_report_jsonl(report));
  });
}

estc_status estc_score_cls_file(const char* path, double* out_accuracy) {
  return guarded([&] {
    require(path && out_accuracy, "path and out_accuracy must not be NULL");
    const auto pairs = ec::read_label_pairs(path);
    *out_accuracy = ec::classification_accuracy(pairs.gold, pairs.pred);
  });
}

}  // extern "C"
