#ifndef LINGDIV_H
#define LINGDIV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a fallible call.
 */
typedef enum LdStatus {
  LD_STATUS_OK = 0,
  LD_STATUS_NULL_POINTER = 1,
  LD_STATUS_INVALID_UTF8 = 2,
  LD_STATUS_PARSE = 3,
  LD_STATUS_VALIDATION = 4,
  LD_STATUS_PARAMETER = 5,
  LD_STATUS_ELIGIBILITY = 6,
  LD_STATUS_NOT_FOUND = 7,
  LD_STATUS_IO = 8,
  LD_STATUS_OUT_OF_RANGE = 9,
  LD_STATUS_PANIC = 10,
} LdStatus;

/**
 * Diversity measure tags used by [`LdDiversityRecord`].
 */
typedef enum LdMeasure {
  LD_MEASURE_WITHIN = 0,
  LD_MEASURE_BETWEEN = 1,
  LD_MEASURE_RELATIVE = 2,
} LdMeasure;

/**
 * Opaque corpus handle.
 */
typedef struct LdCorpus LdCorpus;

/**
 * Opaque handle to a diversity run.
 */
typedef struct LdDiversityRun LdDiversityRun;

/**
 * Sampling and peer settings for [`ld_diversity_compute`].
 */
typedef struct LdDiversityParams {
  size_t train_budget;
  size_t eval_budget;
  size_t n_samples;
  size_t stage_width;
  size_t min_test_convs;
  /**
   * Nonzero lets peers come from any cohort.
   */
  uint8_t peers_any_cohort;
} LdDiversityParams;

typedef struct LdDiversityRecord {
  size_t stage_index;
  enum LdMeasure measure;
  /**
   * Bits per token.
   */
  double value;
  size_t n_test_convs;
  size_t n_samples_used;
} LdDiversityRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; empty if none. Valid until the next failing call.
 */
const char *ld_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ld_version(void);

/**
 * Loads a JSONL corpus file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LdStatus ld_corpus_load_path(const char *path,
                                  size_t min_conversations,
                                  size_t min_counselor_messages,
                                  struct LdCorpus **out);

/**
 * Parses a JSONL corpus held in memory.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum LdStatus ld_corpus_load_jsonl(const char *text,
                                   size_t min_conversations,
                                   size_t min_counselor_messages,
                                   struct LdCorpus **out);

/**
 * # Safety
 * `corpus` must come from a corpus loader and not be freed twice. Null is ignored.
 */
void ld_corpus_free(struct LdCorpus *corpus);

/**
 * Number of individuals, or 0 for null.
 *
 * # Safety
 * `corpus` must be null or a live handle.
 */
size_t ld_corpus_individual_count(const struct LdCorpus *corpus);

/**
 * Number of conversations, or 0 for null.
 *
 * # Safety
 * `corpus` must be null or a live handle.
 */
size_t ld_corpus_conversation_count(const struct LdCorpus *corpus);

/**
 * Default diversity settings.
 */
struct LdDiversityParams ld_diversity_params_default(void);

/**
 * Computes within, between, and relative diversity for every life-stage.
 *
 * # Safety
 * `corpus` and `params` must be live pointers and `out` a valid pointer.
 */
enum LdStatus ld_diversity_compute(const struct LdCorpus *corpus,
                                   const struct LdDiversityParams *params,
                                   uint64_t seed,
                                   struct LdDiversityRun **out);

/**
 * # Safety
 * `run` must come from [`ld_diversity_compute`] and not be freed twice. Null is ignored.
 */
void ld_diversity_free(struct LdDiversityRun *run);

/**
 * Number of records, or 0 for null.
 *
 * # Safety
 * `run` must be null or a live handle.
 */
size_t ld_diversity_record_count(const struct LdDiversityRun *run);

/**
 * Number of cells that could not be computed, or 0 for null.
 *
 * # Safety
 * `run` must be null or a live handle.
 */
size_t ld_diversity_skipped_count(const struct LdDiversityRun *run);

/**
 * Copies record `index` into `out`.
 *
 * # Safety
 * `run` must be a live handle and `out` a valid pointer.
 */
enum LdStatus ld_diversity_record(const struct LdDiversityRun *run,
                                  size_t index,
                                  struct LdDiversityRecord *out);

/**
 * Individual id of record `index`, owned by `run`; null if out of range.
 *
 * # Safety
 * `run` must be null or a live handle.
 */
const char *ld_diversity_record_individual(const struct LdDiversityRun *run, size_t index);

/**
 * The run as CSV text; release with [`ld_string_free`]. Null on failure.
 *
 * # Safety
 * `run` must be null or a live handle.
 */
char *ld_diversity_csv(const struct LdDiversityRun *run);

/**
 * # Safety
 * `s` must come from this library and not be freed twice. Null is ignored.
 */
void ld_string_free(char *s);

/**
 * Cross-entropy in bits per token of `eval` under a unigram model fitted on `train`.
 *
 * # Safety
 * Arrays must hold the stated number of elements; `out` must be valid.
 */
enum LdStatus ld_cross_entropy(const uint32_t *train,
                               size_t n_train,
                               const uint32_t *eval,
                               size_t n_eval,
                               double *out);

/**
 * Two-sided exact binomial p-value for `k` successes in `n` trials.
 *
 * # Safety
 * `p_value` must be a valid pointer.
 */
enum LdStatus ld_binom_test(uint64_t k, uint64_t n, double p0, double *p_value);

/**
 * Two-sided Mann-Whitney U test. `u` receives U for sample `a`.
 *
 * # Safety
 * Arrays must hold the stated number of elements; outputs must be valid.
 */
enum LdStatus ld_mann_whitney(const double *a,
                              size_t n_a,
                              const double *b,
                              size_t n_b,
                              double *u,
                              double *p_value);

/**
 * Spearman rank correlation. Returns `Eligibility` when either input is constant.
 *
 * # Safety
 * Arrays must hold `n` elements; `rho` must be valid.
 */
enum LdStatus ld_spearman(const double *x, const double *y, size_t n, double *rho);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LINGDIV_H */
