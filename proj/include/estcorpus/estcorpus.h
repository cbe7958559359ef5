#ifndef ESTCORPUS_H
#define ESTCORPUS_H

/* C interface to the estcorpus library.
 *
 * Every fallible call returns an estc_status; on failure the message is
 * available from estc_last_error() on the same thread until the next call.
 * Strings and arrays handed out by the library are released with estc_free().
 * Handles are released with their matching *_free function; passing NULL to
 * any free function is a no-op. */

#include <stddef.h>
#include <stdint.h>

#if defined(ESTC_BUILDING_LIBRARY)
#define ESTC_API __attribute__((visibility("default")))
#else
#define ESTC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum estc_status {
  ESTC_OK = 0,
  ESTC_INVALID_ARGUMENT = 1,
  ESTC_UNREADABLE_FILE,
  ESTC_MALFORMED_RECORD,
  ESTC_IO_ERROR,
  ESTC_TEXT_TOO_SHORT,
  ESTC_MISSING_LEMMAS,
  ESTC_VOCAB_SIZE_TOO_SMALL,
  ESTC_EMPTY_CORPUS,
  ESTC_ID_OUT_OF_RANGE,
  ESTC_CORPUS_TOO_SMALL,
  ESTC_NO_MASKABLE_TOKENS,
  ESTC_PIECE_NOT_IN_VOCAB,
  ESTC_CORRUPT_RECORD,
  ESTC_UNKNOWN_FEATURE,
  ESTC_LENGTH_MISMATCH,
  ESTC_MALFORMED_TAG,
  ESTC_EMPTY_INPUT,
  ESTC_CONFIG_ERROR,
  ESTC_INTERNAL
} estc_status;

typedef struct estc_config estc_config;
typedef struct estc_report estc_report;
typedef struct estc_vocab estc_vocab;
typedef struct estc_profiles estc_profiles;
typedef struct estc_example_reader estc_example_reader;

typedef struct estc_corpus_stats {
  uint64_t documents;
  uint64_t sentences;
  uint64_t words;
} estc_corpus_stats;

/* --- errors and memory --- */
ESTC_API const char* estc_last_error(void);
/* Pipeline stage named by the last error, or "" when it was not a stage failure. */
ESTC_API const char* estc_last_error_stage(void);
ESTC_API const char* estc_status_name(estc_status status);
ESTC_API const char* estc_version(void);
ESTC_API void estc_free(void* ptr);

/* --- configuration --- */
ESTC_API estc_status estc_config_new(estc_config** out);
/* On ESTC_CONFIG_ERROR the last error holds one "path:line: message" per line. */
ESTC_API estc_status estc_config_load(const char* path, estc_config** out);
/* key is "section.key" or a bare key unique across sections. */
ESTC_API estc_status estc_config_set(estc_config* config, const char* key, const char* value);
ESTC_API estc_status estc_config_check(const estc_config* config);
/* JSON object with every effective setting. */
ESTC_API estc_status estc_config_dump(const estc_config* config, char** out_json);
ESTC_API void estc_config_free(estc_config* config);

/* --- pipeline --- */
ESTC_API estc_status estc_run_pipeline(const estc_config* config, unsigned workers, estc_report** out);
ESTC_API estc_status estc_report_jsonl(const estc_report* report, char** out);
ESTC_API estc_status estc_report_table(const estc_report* report, char** out);
ESTC_API estc_status estc_report_stats(const estc_report* report, estc_corpus_stats* before, estc_corpus_stats* after);
ESTC_API void estc_report_free(estc_report* report);

/* --- corpus and text --- */
/* format: "vert-xml", "blankline-text" or "json-lines". */
ESTC_API estc_status estc_corpus_stats_file(const char* path, const char* format, estc_corpus_stats* out);
ESTC_API estc_status estc_strip_markup(const char* text, char** out);
/* 32 hex digits of the 128-bit dedup digest. */
ESTC_API estc_status estc_dedup_key(const char* text, char** out_hex);
ESTC_API estc_status estc_masked_budget(uint32_t max_seq_length, double masked_lm_prob, uint32_t* out);
ESTC_API uint32_t estc_crc32c(const void* data, size_t size);
ESTC_API uint32_t estc_mask_crc(uint32_t crc);

/* --- language identification --- */
/* dir may be NULL for the profiles shipped with the library. */
ESTC_API estc_status estc_profiles_load(const char* dir, estc_profiles** out);
/* out_lang receives a string to release with estc_free. */
ESTC_API estc_status estc_detect_language(const estc_profiles* profiles, const char* text, char** out_lang,
                                          double* out_probability);
ESTC_API void estc_profiles_free(estc_profiles* profiles);

/* --- BPE vocabulary --- */
ESTC_API estc_status estc_vocab_train(const char* corpus_path, const char* format, uint32_t vocab_size,
                                      estc_vocab** out);
ESTC_API estc_status estc_vocab_load(const char* vocab_path, const char* merges_path, estc_vocab** out);
ESTC_API estc_status estc_vocab_save(const estc_vocab* vocab, const char* vocab_path, const char* merges_path);
ESTC_API size_t estc_vocab_size(const estc_vocab* vocab);
ESTC_API estc_status estc_vocab_encode(const estc_vocab* vocab, const char* text, int32_t** out_ids, size_t* out_count);
/* Pieces joined by single spaces. */
ESTC_API estc_status estc_vocab_encode_pieces(const estc_vocab* vocab, const char* text, char** out);
ESTC_API estc_status estc_vocab_decode(const estc_vocab* vocab, const int32_t* ids, size_t count, char** out);
ESTC_API void estc_vocab_free(estc_vocab* vocab);

/* --- pretraining examples --- */
/* Uses the [pretrain] settings of config; out_summary_json may be NULL. */
ESTC_API estc_status estc_make_examples(const char* corpus_path, const char* format, const estc_vocab* vocab,
                                        const estc_config* config, const char* out_dir, unsigned workers,
                                        char** out_summary_json);
/* Shards are read round-robin, which restores write order for shards given in index order. */
ESTC_API estc_status estc_examples_open(const char* const* paths, size_t count, estc_example_reader** out);
/* *out_json is NULL at end of input; otherwise one example as a JSON object. */
ESTC_API estc_status estc_examples_next(estc_example_reader* reader, char** out_json);
ESTC_API void estc_examples_close(estc_example_reader* reader);

/* --- scorers --- */
/* `token gold pred` column files, blank line between sequences. */
ESTC_API estc_status estc_score_tags_file(const char* path, double* out_accuracy);
/* Either output may be NULL. */
ESTC_API estc_status estc_score_ner_file(const char* path, char** out_text_report, char** out_jsonl_report);
/* `gold pred` per line. */
ESTC_API estc_status estc_score_cls_file(const char* path, double* out_accuracy);

#ifdef __cplusplus
}
#endif

#endif
