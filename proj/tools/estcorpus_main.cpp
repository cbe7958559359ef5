// estcorpus command-line front end. Talks to the library only through the C API.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "estcorpus/estcorpus.h"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

struct Failure {
  int exit_code;
  std::string message;
};

bool is_validation(estc_status s) {
  return s == ESTC_INVALID_ARGUMENT || s == ESTC_CONFIG_ERROR || s == ESTC_VOCAB_SIZE_TOO_SMALL;
}

void check(estc_status s) {
  if (s == ESTC_OK) return;
  std::string msg = estc_last_error();
  if (msg.empty()) msg = estc_status_name(s);
  throw Failure{is_validation(s) ? kExitValidation : kExitRuntime, fmt::format("{} ({})", msg, estc_status_name(s))};
}

// Owns a string returned by the library.
struct Owned {
  char* p = nullptr;
  ~Owned() { estc_free(p); }
  std::string str() const { return p ? std::string(p) : std::string(); }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  ~Handle() { Free(p); }
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
};

using ConfigHandle = Handle<estc_config, estc_config_free>;
using VocabHandle = Handle<estc_vocab, estc_vocab_free>;
using ReportHandle = Handle<estc_report, estc_report_free>;
using ReaderHandle = Handle<estc_example_reader, estc_examples_close>;

struct Common {
  std::optional<std::uint64_t> seed;
  unsigned workers = 1;
  std::string format = "vert-xml";
  std::string report;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--seed", c.seed, "Random seed for example generation");
  cmd->add_option("--workers", c.workers, "Worker threads (output does not depend on it)")->check(CLI::PositiveNumber);
  cmd->add_option("--format", c.format, "Corpus format: vert-xml, blankline-text or json-lines");
  cmd->add_option("--report", c.report, "Write the json-lines report to this path");
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Failure{kExitRuntime, fmt::format("cannot write '{}'", path)};
}

void set(estc_config* cfg, const std::string& key, const std::string& value) {
  check(estc_config_set(cfg, key.c_str(), value.c_str()));
}

std::string join_paths(const std::vector<std::string>& paths) {
  std::string out;
  for (const auto& p : paths) out += (out.empty() ? "" : ",") + p;
  return out;
}

// Options shared by the subcommands that drive the pipeline.
struct PipelineArgs {
  std::string config_file;
  std::vector<std::string> overrides;
  std::vector<std::string> inputs;
  std::string out_dir;
  std::string out_format;
};

void add_pipeline_args(CLI::App* cmd, PipelineArgs& a, bool inputs_required) {
  cmd->add_option("--config", a.config_file, "Configuration file")->check(CLI::ExistingFile);
  cmd->add_option("--set", a.overrides, "Override a setting, section.key=value (repeatable)");
  auto* in = cmd->add_option("inputs", a.inputs, "Input corpus files");
  if (inputs_required) in->required();
  cmd->add_option("-o,--output", a.out_dir, "Output directory");
  cmd->add_option("--out-format", a.out_format, "Format of the written corpus (default: input format)");
}

void load_config(ConfigHandle& cfg, const PipelineArgs& a, const Common& c, CLI::App* cmd) {
  if (!a.config_file.empty())
    check(estc_config_load(a.config_file.c_str(), &cfg.p));
  else
    check(estc_config_new(&cfg.p));
  for (const auto& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Failure{kExitValidation, fmt::format("--set expects key=value, got '{}'", kv)};
    set(cfg.p, kv.substr(0, eq), kv.substr(eq + 1));
  }
  // Explicit flags win over the file.
  if (!a.inputs.empty()) set(cfg.p, "input.paths", join_paths(a.inputs));
  if (cmd->count("--format") || a.config_file.empty()) set(cfg.p, "input.format", c.format);
  if (!a.out_dir.empty()) set(cfg.p, "output.dir", a.out_dir);
  if (!a.out_format.empty()) set(cfg.p, "output.format", a.out_format);
  if (!c.report.empty()) set(cfg.p, "output.report", c.report);
  if (c.seed) set(cfg.p, "pretrain.seed", std::to_string(*c.seed));
}

void only_stages(estc_config* cfg, std::initializer_list<const char*> enabled) {
  for (const char* stage : {"strip", "langfilter", "dedup", "heuristics", "truecase", "bpe", "examples"}) {
    const bool on = std::find_if(enabled.begin(), enabled.end(),
                                 [&](const char* e) { return std::string_view(e) == stage; }) != enabled.end();
    set(cfg, fmt::format("stages.{}", stage), on ? "true" : "false");
  }
}

void run_and_print(estc_config* cfg, unsigned workers) {
  check(estc_config_check(cfg));
  ReportHandle report;
  check(estc_run_pipeline(cfg, workers, &report.p));
  Owned table;
  check(estc_report_table(report.p, &table.p));
  std::cout << table.str();
  Owned jsonl;
  check(estc_report_jsonl(report.p, &jsonl.p));
  std::cout << '\n' << jsonl.str();
}

std::vector<std::string> read_lines(std::istream& in) {
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  return lines;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corpus cleaning, BPE vocabulary and pretraining-example toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(estc_version()));

  Common common;
  PipelineArgs pargs;

  // stats
  auto* stats = app.add_subcommand("stats", "Document, sentence and word counts");
  std::vector<std::string> stats_inputs;
  stats->add_option("inputs", stats_inputs, "Corpus files")->required()->check(CLI::ExistingFile);
  add_common(stats, common);

  // document stages
  auto* clean = app.add_subcommand("clean", "Strip markup and decode entities");
  auto* dedup = app.add_subcommand("dedup", "Drop exact duplicates (case and whitespace insensitive)");
  auto* filter = app.add_subcommand("filter", "Language and heuristic quality filtering");
  auto* truecase = app.add_subcommand("truecase", "Restore canonical casing from lemma evidence");
  std::string lexicon;
  bool no_lang = false;
  bool no_heuristics = false;
  std::optional<long long> min_words;
  std::optional<double> max_stop;
  std::optional<double> max_punct;
  std::optional<double> lang_min;
  std::string target_lang;
  std::string stopwords;
  std::string profiles;
  for (auto* cmd : {clean, dedup, filter, truecase}) {
    add_pipeline_args(cmd, pargs, true);
    add_common(cmd, common);
  }
  filter->add_flag("--no-lang", no_lang, "Skip the language filter");
  filter->add_flag("--no-heuristics", no_heuristics, "Skip the heuristic filter");
  filter->add_option("--min-words", min_words, "Minimum words per document");
  filter->add_option("--max-stopword-ratio", max_stop, "Maximum stopword fraction");
  filter->add_option("--max-punct-ratio", max_punct, "Maximum punctuation fraction");
  filter->add_option("--lang-confidence-min", lang_min, "Minimum detector probability");
  filter->add_option("--target-lang", target_lang, "Language to keep");
  filter->add_option("--stopwords", stopwords, "Stopword list, one word per line");
  filter->add_option("--profiles", profiles, "Directory of language profiles");
  truecase->add_option("--lexicon", lexicon, "Casing lexicon TSV (default: built from lemmas)");

  // bpe-train
  auto* bpe_train = app.add_subcommand("bpe-train", "Train a BPE vocabulary");
  std::vector<std::string> bpe_inputs;
  std::uint32_t vocab_size = 50000;
  std::string bpe_out = ".";
  bpe_train->add_option("inputs", bpe_inputs, "Corpus files")->required()->check(CLI::ExistingFile);
  bpe_train->add_option("--vocab-size", vocab_size, "Number of pieces including specials");
  bpe_train->add_option("-o,--output", bpe_out, "Directory for vocab.txt and merges.txt");
  add_common(bpe_train, common);

  // bpe-encode
  auto* bpe_encode = app.add_subcommand("bpe-encode", "Encode text with a trained vocabulary");
  std::string vocab_file;
  std::string merges_file;
  std::vector<std::string> texts;
  bool as_ids = false;
  bpe_encode->add_option("--vocab", vocab_file, "vocab.txt")->required()->check(CLI::ExistingFile);
  bpe_encode->add_option("--merges", merges_file, "merges.txt")->required()->check(CLI::ExistingFile);
  bpe_encode->add_flag("--ids", as_ids, "Print ids instead of pieces");
  bpe_encode->add_option("text", texts, "Text to encode (default: lines of stdin)");
  add_common(bpe_encode, common);

  // make-examples
  auto* make = app.add_subcommand("make-examples", "Generate sharded MLM/NSP pretraining examples");
  std::string make_corpus;
  std::string make_out = ".";
  std::optional<std::uint32_t> max_seq;
  std::optional<double> mlm_prob;
  std::optional<double> next_prob;
  std::optional<double> short_prob;
  std::optional<std::uint32_t> dupe;
  std::optional<std::uint32_t> shards;
  std::string make_config;
  make->add_option("corpus", make_corpus, "Cleaned corpus")->required()->check(CLI::ExistingFile);
  make->add_option("--vocab", vocab_file, "vocab.txt")->required()->check(CLI::ExistingFile);
  make->add_option("--merges", merges_file, "merges.txt")->required()->check(CLI::ExistingFile);
  make->add_option("-o,--output", make_out, "Directory for the shard files");
  make->add_option("--config", make_config, "Configuration file ([pretrain] section is used)")
      ->check(CLI::ExistingFile);
  make->add_option("--max-seq-length", max_seq);
  make->add_option("--masked-lm-prob", mlm_prob);
  make->add_option("--random-next-prob", next_prob);
  make->add_option("--short-seq-prob", short_prob);
  make->add_option("--dupe-factor", dupe);
  make->add_option("--shards", shards);
  add_common(make, common);

  // read-examples
  auto* read = app.add_subcommand("read-examples", "Verify and print examples from shard files");
  std::vector<std::string> shard_paths;
  bool count_only = false;
  read->add_option("shards", shard_paths, "Shard files in index order")->required()->check(CLI::ExistingFile);
  read->add_flag("--count", count_only, "Only print the number of examples");
  add_common(read, common);

  // scorers
  std::string score_file;
  bool score_jsonl = false;
  auto* score_tags = app.add_subcommand("score-tags", "Token tagging accuracy");
  auto* score_ner = app.add_subcommand("score-ner", "conlleval-style entity span F1");
  auto* score_cls = app.add_subcommand("score-cls", "Classification accuracy");
  for (auto* cmd : {score_tags, score_ner, score_cls}) {
    cmd->add_option("file", score_file, "Input file")->required()->check(CLI::ExistingFile);
    add_common(cmd, common);
  }
  score_ner->add_flag("--jsonl", score_jsonl, "Print the json-lines report instead of the text report");

  // run
  auto* run = app.add_subcommand("run", "Full pipeline from raw corpus to pretraining shards");
  add_pipeline_args(run, pargs, false);
  add_common(run, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    if (stats->parsed()) {
      estc_corpus_stats total{};
      std::string jsonl;
      std::cout << fmt::format("{:<40}{:>12}{:>12}{:>14}\n", "file", "documents", "sentences", "words");
      for (const auto& path : stats_inputs) {
        estc_corpus_stats s{};
        check(estc_corpus_stats_file(path.c_str(), common.format.c_str(), &s));
        total.documents += s.documents;
        total.sentences += s.sentences;
        total.words += s.words;
        std::cout << fmt::format("{:<40}{:>12}{:>12}{:>14}\n", path, s.documents, s.sentences, s.words);
        jsonl += fmt::format("{{\"file\":\"{}\",\"documents\":{},\"sentences\":{},\"words\":{}}}\n", path,
                             s.documents, s.sentences, s.words);
      }
      if (stats_inputs.size() > 1)
        std::cout << fmt::format("{:<40}{:>12}{:>12}{:>14}\n", "total", total.documents, total.sentences,
                                 total.words);
      if (!common.report.empty()) write_file(common.report, jsonl);
      return 0;
    }

    for (auto* cmd : {clean, dedup, filter, truecase, run}) {
      if (!cmd->parsed()) continue;
      ConfigHandle cfg;
      load_config(cfg, pargs, common, cmd);
      if (cmd == clean) only_stages(cfg.p, {"strip"});
      if (cmd == dedup) only_stages(cfg.p, {"dedup"});
      if (cmd == truecase) {
        only_stages(cfg.p, {"truecase"});
        if (!lexicon.empty()) set(cfg.p, "truecase.lexicon", lexicon);
      }
      if (cmd == filter) {
        if (no_lang && no_heuristics)
          throw Failure{kExitValidation, "--no-lang and --no-heuristics leave nothing to do"};
        if (no_lang) only_stages(cfg.p, {"heuristics"});
        else if (no_heuristics) only_stages(cfg.p, {"langfilter"});
        else only_stages(cfg.p, {"langfilter", "heuristics"});
        if (min_words) set(cfg.p, "filter.min_words", std::to_string(*min_words));
        if (max_stop) set(cfg.p, "filter.max_stopword_ratio", fmt::format("{}", *max_stop));
        if (max_punct) set(cfg.p, "filter.max_punct_ratio", fmt::format("{}", *max_punct));
        if (lang_min) set(cfg.p, "filter.lang_confidence_min", fmt::format("{}", *lang_min));
        if (!target_lang.empty()) set(cfg.p, "filter.target_lang", target_lang);
        if (!stopwords.empty()) set(cfg.p, "filter.stopwords", stopwords);
        if (!profiles.empty()) set(cfg.p, "filter.profiles", profiles);
      }
      run_and_print(cfg.p, common.workers);
      return 0;
    }

    if (bpe_train->parsed()) {
      VocabHandle vocab;
      if (bpe_inputs.size() != 1)
        throw Failure{kExitValidation, "bpe-train takes one corpus file; concatenate shards first"};
      check(estc_vocab_train(bpe_inputs[0].c_str(), common.format.c_str(), vocab_size, &vocab.p));
      std::filesystem::create_directories(bpe_out);
      const auto v = (std::filesystem::path(bpe_out) / "vocab.txt").string();
      const auto m = (std::filesystem::path(bpe_out) / "merges.txt").string();
      check(estc_vocab_save(vocab.p, v.c_str(), m.c_str()));
      std::cout << fmt::format("vocabulary: {} pieces\nwrote {}\nwrote {}\n", estc_vocab_size(vocab.p), v, m);
      if (!common.report.empty())
        write_file(common.report, fmt::format("{{\"vocab_size\":{},\"vocab\":\"{}\",\"merges\":\"{}\"}}\n",
                                              estc_vocab_size(vocab.p), v, m));
      return 0;
    }

    if (bpe_encode->parsed()) {
      VocabHandle vocab;
      check(estc_vocab_load(vocab_file.c_str(), merges_file.c_str(), &vocab.p));
      if (texts.empty()) texts = read_lines(std::cin);
      for (const auto& t : texts) {
        if (as_ids) {
          int32_t* ids = nullptr;
          size_t n = 0;
          check(estc_vocab_encode(vocab.p, t.c_str(), &ids, &n));
          std::string line;
          for (size_t i = 0; i < n; ++i) line += fmt::format("{}{}", i ? " " : "", ids[i]);
          estc_free(ids);
          std::cout << line << '\n';
        } else {
          Owned pieces;
          check(estc_vocab_encode_pieces(vocab.p, t.c_str(), &pieces.p));
          std::cout << pieces.str() << '\n';
        }
      }
      return 0;
    }

    if (make->parsed()) {
      ConfigHandle cfg;
      if (!make_config.empty())
        check(estc_config_load(make_config.c_str(), &cfg.p));
      else
        check(estc_config_new(&cfg.p));
      if (common.seed) set(cfg.p, "pretrain.seed", std::to_string(*common.seed));
      if (max_seq) set(cfg.p, "pretrain.max_seq_length", std::to_string(*max_seq));
      if (mlm_prob) set(cfg.p, "pretrain.masked_lm_prob", fmt::format("{}", *mlm_prob));
      if (next_prob) set(cfg.p, "pretrain.random_next_prob", fmt::format("{}", *next_prob));
      if (short_prob) set(cfg.p, "pretrain.short_seq_prob", fmt::format("{}", *short_prob));
      if (dupe) set(cfg.p, "pretrain.dupe_factor", std::to_string(*dupe));
      if (shards) set(cfg.p, "pretrain.shards", std::to_string(*shards));
      VocabHandle vocab;
      check(estc_vocab_load(vocab_file.c_str(), merges_file.c_str(), &vocab.p));
      Owned summary;
      check(estc_make_examples(make_corpus.c_str(), common.format.c_str(), vocab.p, cfg.p, make_out.c_str(),
                               common.workers, &summary.p));
      std::cout << summary.str() << '\n';
      if (!common.report.empty()) write_file(common.report, summary.str() + "\n");
      return 0;
    }

    if (read->parsed()) {
      std::vector<const char*> paths;
      for (const auto& p : shard_paths) paths.push_back(p.c_str());
      ReaderHandle reader;
      check(estc_examples_open(paths.data(), paths.size(), &reader.p));
      std::uint64_t n = 0;
      for (;;) {
        Owned json;
        check(estc_examples_next(reader.p, &json.p));
        if (!json.p) break;
        ++n;
        if (!count_only) std::cout << json.str() << '\n';
      }
      if (count_only) std::cout << n << '\n';
      if (!common.report.empty()) write_file(common.report, fmt::format("{{\"examples\":{}}}\n", n));
      return 0;
    }

    if (score_tags->parsed() || score_cls->parsed()) {
      double acc = 0;
      const bool tags = score_tags->parsed();
      check(tags ? estc_score_tags_file(score_file.c_str(), &acc) : estc_score_cls_file(score_file.c_str(), &acc));
      std::cout << fmt::format("accuracy: {:6.2f}%\n", 100.0 * acc);
      if (!common.report.empty())
        write_file(common.report, fmt::format("{{\"metric\":\"{}\",\"accuracy\":{}}}\n",
                                              tags ? "tagging_accuracy" : "classification_accuracy", acc));
      return 0;
    }

    if (score_ner->parsed()) {
      Owned text;
      Owned jsonl;
      check(estc_score_ner_file(score_file.c_str(), &text.p, &jsonl.p));
      std::cout << (score_jsonl ? jsonl.str() : text.str());
      if (!common.report.empty()) write_file(common.report, jsonl.str());
      return 0;
    }
  } catch (const Failure& f) {
    std::cerr << "estcorpus: " << f.message << '\n';
    return f.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "estcorpus: " << e.what() << '\n';
    return kExitRuntime;
  }
  return 0;
}
