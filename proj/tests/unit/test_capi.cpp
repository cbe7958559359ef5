#include <doctest.h>

#include <cstring>
#include <string>

#include "estcorpus/estcorpus.h"
#include "test_support.hpp"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  estc_free(s);
  return out;
}

}  // namespace

TEST_CASE("status names and version") {
  CHECK(std::string(estc_status_name(ESTC_OK)) == "Ok");
  CHECK(std::string(estc_status_name(ESTC_CORRUPT_RECORD)) == "CorruptRecord");
  CHECK(std::strlen(estc_version()) > 0);
}

TEST_CASE("small pure functions") {
  uint32_t budget = 0;
  CHECK(estc_masked_budget(128, 0.15, &budget) == ESTC_OK);
  CHECK(budget == 20);
  CHECK(estc_masked_budget(512, 0.15, &budget) == ESTC_OK);
  CHECK(budget == 77);
  CHECK(estc_crc32c("123456789", 9) == 0xE3069283u);
  CHECK(estc_mask_crc(0) == 0xa282ead8u);
  char* out = nullptr;
  CHECK(estc_strip_markup("a <b>b</b> &amp; c", &out) == ESTC_OK);
  CHECK(take(out) == "a b & c");
  CHECK(estc_dedup_key("tere   TALLINN\n maailm", &out) == ESTC_OK);
  CHECK(take(out) == "7bf04a78b6d384880a555a9172aac2c1");
}

TEST_CASE("null arguments are rejected with a message") {
  CHECK(estc_strip_markup(nullptr, nullptr) == ESTC_INVALID_ARGUMENT);
  CHECK(std::strlen(estc_last_error()) > 0);
  CHECK(estc_config_load(nullptr, nullptr) == ESTC_INVALID_ARGUMENT);
  estc_config_free(nullptr);
  estc_vocab_free(nullptr);
  estc_report_free(nullptr);
  estc_examples_close(nullptr);
  estc_free(nullptr);
}

TEST_CASE("config errors carry file and line") {
  estc_test::TempDir dir("capi");
  estc_test::write_file(dir / "c.ini", "[input]\npaths = x\n[pretrain]\nmaxseq = 5\n");
  estc_config* cfg = nullptr;
  CHECK(estc_config_load((dir / "c.ini").c_str(), &cfg) == ESTC_CONFIG_ERROR);
  CHECK(cfg == nullptr);
  const std::string msg = estc_last_error();
  CHECK(msg.find("c.ini:4: unknown key 'maxseq' in [pretrain]; did you mean 'max_seq_length'?") != std::string::npos);
}

TEST_CASE("pipeline through the C API, stage named on failure") {
  estc_test::TempDir dir("capi");
  estc_config* cfg = nullptr;
  REQUIRE(estc_config_new(&cfg) == ESTC_OK);
  CHECK(estc_config_set(cfg, "input.paths", estc_test::fixture("pipeline_corpus.jsonl").c_str()) == ESTC_OK);
  CHECK(estc_config_set(cfg, "input.format", "json-lines") == ESTC_OK);
  CHECK(estc_config_set(cfg, "output.dir", dir.path().c_str()) == ESTC_OK);
  CHECK(estc_config_set(cfg, "vocab_size", "300") == ESTC_OK);
  CHECK(estc_config_set(cfg, "dupe_factor", "1") == ESTC_OK);
  CHECK(estc_config_set(cfg, "shards", "0") == ESTC_CONFIG_ERROR);
  CHECK(estc_config_check(cfg) == ESTC_OK);
  char* dump = nullptr;
  CHECK(estc_config_dump(cfg, &dump) == ESTC_OK);
  CHECK(take(dump).find("\"vocab_size\"") != std::string::npos);

  estc_report* report = nullptr;
  REQUIRE(estc_run_pipeline(cfg, 2, &report) == ESTC_OK);
  estc_corpus_stats before{}, after{};
  CHECK(estc_report_stats(report, &before, &after) == ESTC_OK);
  CHECK(before.documents == 12);
  CHECK(after.documents == 8);
  CHECK(after.words == 198);
  char* text = nullptr;
  CHECK(estc_report_jsonl(report, &text) == ESTC_OK);
  CHECK(take(text).find("\"record\":\"summary\"") != std::string::npos);
  CHECK(estc_report_table(report, &text) == ESTC_OK);
  CHECK(take(text).find("dedup") != std::string::npos);
  estc_report_free(report);

  CHECK(estc_config_set(cfg, "input.paths", (dir / "missing.jsonl").c_str()) == ESTC_OK);
  CHECK(estc_run_pipeline(cfg, 1, &report) == ESTC_UNREADABLE_FILE);
  CHECK(std::string(estc_last_error_stage()) == "ingest");
  estc_config_free(cfg);
}

TEST_CASE("vocabulary, examples and reader") {
  estc_test::TempDir dir("capi");
  estc_vocab* vocab = nullptr;
  REQUIRE(estc_vocab_load(estc_test::fixture("replay_vocab/vocab.txt").c_str(),
                          estc_test::fixture("replay_vocab/merges.txt").c_str(), &vocab) == ESTC_OK);
  CHECK(estc_vocab_size(vocab) == 60);
  int32_t* ids = nullptr;
  size_t n = 0;
  CHECK(estc_vocab_encode(vocab, "laevad sadamas", &ids, &n) == ESTC_OK);
  CHECK(n > 0);
  char* text = nullptr;
  CHECK(estc_vocab_decode(vocab, ids, n, &text) == ESTC_OK);
  CHECK(take(text) == "laevad sadamas");
  estc_free(ids);

  estc_config* cfg = nullptr;
  REQUIRE(estc_config_new(&cfg) == ESTC_OK);
  estc_config_set(cfg, "max_seq_length", "16");
  estc_config_set(cfg, "dupe_factor", "3");
  estc_config_set(cfg, "seed", "1");
  char* summary = nullptr;
  REQUIRE(estc_make_examples(estc_test::fixture("replay_docs.jsonl").c_str(), "json-lines", vocab, cfg,
                             dir.path().c_str(), 1, &summary) == ESTC_OK);
  CHECK(take(summary).find("\"examples\":13") != std::string::npos);

  std::vector<std::string> paths;
  for (int s = 0; s < 4; ++s) paths.push_back((dir / ("pretrain-" + std::to_string(s) + "-of-4.tfrecord")).string());
  std::vector<const char*> cpaths;
  for (auto& p : paths) cpaths.push_back(p.c_str());
  estc_example_reader* reader = nullptr;
  REQUIRE(estc_examples_open(cpaths.data(), cpaths.size(), &reader) == ESTC_OK);
  std::ifstream golden(estc_test::fixture("golden_examples.jsonl"));
  int count = 0;
  for (;;) {
    char* json = nullptr;
    REQUIRE(estc_examples_next(reader, &json) == ESTC_OK);
    if (!json) break;
    ++count;
    std::string want;
    std::getline(golden, want);
    std::string got = take(json);
    std::erase(want, ' ');
    CHECK(got == want);
  }
  CHECK(count == 13);
  estc_examples_close(reader);
  estc_config_free(cfg);

  estc_vocab* bad = nullptr;
  CHECK(estc_vocab_train(estc_test::fixture("replay_docs.jsonl").c_str(), "json-lines", 6, &bad) ==
        ESTC_VOCAB_SIZE_TOO_SMALL);
  estc_vocab_free(vocab);
}

TEST_CASE("language detection and scorers") {
  estc_profiles* profiles = nullptr;
  REQUIRE(estc_profiles_load(nullptr, &profiles) == ESTC_OK);
  char* lang = nullptr;
  double p = 0;
  CHECK(estc_detect_language(profiles, "Tere tulemast Eestisse, siin on väga ilus suvi.", &lang, &p) == ESTC_OK);
  CHECK(take(lang) == "et");
  CHECK(p > 0.9);
  CHECK(estc_detect_language(profiles, "42 !!", &lang, &p) == ESTC_TEXT_TOO_SHORT);
  estc_profiles_free(profiles);

  double acc = 0;
  CHECK(estc_score_tags_file(estc_test::fixture("ner/tags.txt").c_str(), &acc) == ESTC_OK);
  CHECK(acc == doctest::Approx(13.0 / 15.0));
  CHECK(estc_score_cls_file(estc_test::fixture("ner/labels.txt").c_str(), &acc) == ESTC_OK);
  CHECK(acc == doctest::Approx(7.0 / 9.0));
  char* report = nullptr;
  CHECK(estc_score_ner_file(estc_test::fixture("ner/predictions.txt").c_str(), &report, nullptr) == ESTC_OK);
  CHECK(take(report) == estc_test::read_file(estc_test::fixture("ner/conlleval_expected.txt")));

  estc_corpus_stats s{};
  CHECK(estc_corpus_stats_file(estc_test::fixture("pipeline_corpus.jsonl").c_str(), "json-lines", &s) == ESTC_OK);
  CHECK(s.words == 279);
  CHECK(estc_corpus_stats_file("/nonexistent", "json-lines", &s) == ESTC_UNREADABLE_FILE);
  CHECK(estc_corpus_stats_file(estc_test::fixture("pipeline_corpus.jsonl").c_str(), "csv", &s) ==
        ESTC_INVALID_ARGUMENT);
}
