#include <doctest.h>

#include <nlohmann/json.hpp>

#include "estcorpus/corpus_io.hpp"
#include "estcorpus/error.hpp"
#include "estcorpus/pipeline.hpp"
#include "estcorpus/tfrecord.hpp"
#include "test_support.hpp"

using namespace estcorpus;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

PipelineConfig fixture_config(const fs::path& out) {
  PipelineConfig c;
  c.inputs = {estc_test::fixture("pipeline_corpus.jsonl")};
  c.input_format = CorpusFormat::JsonLines;
  c.output_dir = out;
  c.vocab_size = 300;
  c.generation.dupe_factor = 2;
  c.generation.max_seq_length = 64;
  return c;
}

std::vector<json> jsonl(const fs::path& p) {
  std::vector<json> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

CorpusStats stats_of(const json& j) {
  return {j["documents"].get<std::uint64_t>(), j["sentences"].get<std::uint64_t>(), j["words"].get<std::uint64_t>()};
}

}  // namespace

TEST_CASE("fixture run matches the hand-audited manifest") {
  estc_test::TempDir dir("pipe");
  const auto report = run_pipeline(fixture_config(dir.path()));
  const auto manifest = json::parse(estc_test::read_file(estc_test::fixture("pipeline_expected.json")));

  CHECK(report.before == stats_of(manifest["before"]));
  CHECK(report.after == stats_of(manifest["after"]));

  const auto drops = jsonl(dir / "drops.jsonl");
  REQUIRE(drops.size() == manifest["drops"].size());
  for (std::size_t i = 0; i < drops.size(); ++i) {
    const auto& want = manifest["drops"][i];
    CAPTURE(i);
    CHECK(drops[i]["id"] == want["id"]);
    CHECK(drops[i]["stage"] == want["stage"]);
    CHECK(drops[i]["reason"] == want["reason"]);
    if (want.contains("detail")) CHECK(drops[i]["detail"].get<double>() == want["detail"].get<double>());
  }
  std::vector<std::string> kept;
  for (const auto& d : read_documents(dir / "corpus.jsonl", CorpusFormat::JsonLines)) kept.push_back(d.id);
  CHECK(kept == manifest["kept"].get<std::vector<std::string>>());

  CHECK(report.drops.at("Duplicate") == 2);
  CHECK(report.examples.shards.size() == 4);
  std::uint64_t total = 0;
  for (auto n : report.examples.shard_sizes) total += n;
  CHECK(total == report.examples.examples);
  CHECK(report.examples.examples > 0);
  std::vector<fs::path> shards;
  for (const auto& p : report.examples.shards) shards.push_back(report.output_dir / p);
  CHECK(read_tfrecords(shards).size() == total);
  CHECK(Vocab::load(dir / "vocab.txt", dir / "merges.txt").size() == 300);
}

TEST_CASE("stage chain is consistent and monotone") {
  estc_test::TempDir dir("pipe");
  const auto report = run_pipeline(fixture_config(dir.path()));
  REQUIRE(report.stages.size() == 6);
  const std::vector<std::string> names = {"ingest", "strip", "langfilter", "dedup", "heuristics", "truecase"};
  for (std::size_t k = 0; k < names.size(); ++k) CHECK(report.stages[k].stage == names[k]);
  for (std::size_t k = 0; k + 1 < report.stages.size(); ++k)
    CHECK(report.stages[k].kept == report.stages[k + 1].input);
  for (const auto& s : report.stages) {
    CAPTURE(s.stage);
    if (s.stage != "strip") CHECK(s.kept.dominated_by(s.input));
  }
  CHECK(report.after.dominated_by(report.before));
  CHECK(report.stages.front().input == report.before);
  CHECK(report.stages.back().kept == report.after);

  const auto lines = jsonl(dir / "report.jsonl");
  std::size_t stage_lines = 0;
  for (const auto& l : lines) stage_lines += l["record"] == "stage";
  CHECK(stage_lines == report.stages.size());
}

TEST_CASE("outputs are byte-identical for any worker count") {
  estc_test::TempDir a("pipe"), b("pipe");
  run_pipeline(fixture_config(a.path()), 1);
  run_pipeline(fixture_config(b.path()), 4);
  const auto sa = estc_test::snapshot(a.path());
  const auto sb = estc_test::snapshot(b.path());
  CHECK(sa.size() >= 10);
  CHECK(sa == sb);
  CHECK(sa.count(".filtered.partial.jsonl") == 0);
}

TEST_CASE("same seed reproduces, different seed changes examples only") {
  estc_test::TempDir a("pipe"), b("pipe"), c("pipe");
  run_pipeline(fixture_config(a.path()));
  run_pipeline(fixture_config(b.path()));
  CHECK(estc_test::snapshot(a.path()) == estc_test::snapshot(b.path()));
  auto cfg = fixture_config(c.path());
  cfg.generation.seed += 1;
  run_pipeline(cfg);
  CHECK(estc_test::read_file(a / "corpus.jsonl") == estc_test::read_file(c / "corpus.jsonl"));
  CHECK(estc_test::read_file(a / "vocab.txt") == estc_test::read_file(c / "vocab.txt"));
  CHECK(estc_test::read_file(a / "pretrain-0-of-4.tfrecord") != estc_test::read_file(c / "pretrain-0-of-4.tfrecord"));
}

TEST_CASE("all stages disabled is the identity") {
  estc_test::TempDir dir("pipe");
  auto cfg = fixture_config(dir.path());
  cfg.stages = {false, false, false, false, false, false, false};
  const auto report = run_pipeline(cfg);
  CHECK(report.before == report.after);
  const auto in = read_documents(estc_test::fixture("pipeline_corpus.jsonl"), CorpusFormat::JsonLines);
  const auto out = read_documents(dir / "corpus.jsonl", CorpusFormat::JsonLines);
  REQUIRE(in.size() == out.size());
  for (std::size_t i = 0; i < in.size(); ++i) CHECK(out[i].same_content(in[i]));
  CHECK_FALSE(fs::exists(dir / "vocab.txt"));
}

TEST_CASE("format conversion through the pipeline") {
  estc_test::TempDir dir("pipe");
  auto cfg = fixture_config(dir.path());
  cfg.stages = {false, false, false, false, false, false, false};
  cfg.output_format = CorpusFormat::VertXml;
  run_pipeline(cfg);
  const auto out = read_documents(dir / "corpus.xml", CorpusFormat::VertXml);
  const auto in = read_documents(estc_test::fixture("pipeline_corpus.jsonl"), CorpusFormat::JsonLines);
  REQUIRE(out.size() == in.size());
  for (std::size_t i = 0; i < in.size(); ++i) CHECK(out[i].same_content(in[i]));
}

TEST_CASE("failures name the stage") {
  estc_test::TempDir dir("pipe");
  auto cfg = fixture_config(dir.path());
  cfg.inputs = {dir / "missing.jsonl"};
  try {
    run_pipeline(cfg);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "ingest");
    CHECK(e.code() == ErrorCode::UnreadableFile);
  }

  cfg = fixture_config(dir.path());
  cfg.vocab_size = 6;
  try {
    run_pipeline(cfg);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "bpe");
    CHECK(e.code() == ErrorCode::VocabSizeTooSmall);
  }

  estc_test::write_file(dir / "nolemmas.jsonl", "{\"id\":\"x\",\"text\":\"Tere tulemast Tallinna vanalinna, "
                                                "see on ilus koht kus käia ja jalutada.\",\"lang\":\"et\"}\n");
  cfg = fixture_config(dir.path());
  cfg.inputs = {dir / "nolemmas.jsonl"};
  cfg.stages.langfilter = false;
  cfg.stages.bpe = cfg.stages.examples = false;
  try {
    run_pipeline(cfg);
    FAIL("expected StageError");
  } catch (const StageError& e) {
    CHECK(e.stage() == "truecase");
    CHECK(e.code() == ErrorCode::MissingLemmas);
  }
}

TEST_CASE("tokenize_corpus and make_examples") {
  estc_test::TempDir dir("pipe");
  const auto vocab =
      Vocab::load(estc_test::fixture("replay_vocab/vocab.txt"), estc_test::fixture("replay_vocab/merges.txt"));
  const auto docs = tokenize_corpus(estc_test::fixture("replay_docs.jsonl"), CorpusFormat::JsonLines, vocab);
  CHECK(docs.size() == 3);
  GenerationConfig c;
  c.max_seq_length = 16;
  c.dupe_factor = 3;
  c.seed = 1;
  c.shards = 2;
  const auto summary = make_examples(docs, vocab, c, dir.path());
  CHECK(summary.examples == 13);
  CHECK(summary.shard_sizes == std::vector<std::uint64_t>{7, 6});
}
