#ifndef SPANFORGE_H
#define SPANFORGE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. The non-zero values match the command-line exit codes.
 */
typedef enum SfStatus {
  SF_STATUS_OK = 0,
  SF_STATUS_INTERNAL = 1,
  SF_STATUS_INVALID_ARGUMENT = 2,
  SF_STATUS_CONFIG = 3,
  SF_STATUS_INPUT_DATA = 4,
  SF_STATUS_INTEGRITY = 5,
  SF_STATUS_IO = 6,
  SF_STATUS_AUGMENT = 7,
  SF_STATUS_PANIC = 8,
} SfStatus;

typedef enum SfOverlapPolicy {
  SF_OVERLAP_POLICY_GREEDY = 0,
  SF_OVERLAP_POLICY_ALLOW_ALL = 1,
} SfOverlapPolicy;

typedef struct SfCorpus SfCorpus;

typedef struct SfPredictions SfPredictions;

typedef struct SfProbabilities SfProbabilities;

typedef struct SfThresholds {
  double tau_start;
  double tau_end;
  double tau_inside;
} SfThresholds;

/**
 * Exact-match counts and micro scores in percent, rounded to one decimal.
 */
typedef struct SfScores {
  size_t true_positives;
  size_t false_positives;
  size_t false_negatives;
  double precision;
  double recall;
  double f1;
} SfScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *sf_version(void);

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *sf_last_error(void);

/**
 * Loads a canonical JSONL corpus.
 *
 * # Safety
 * `path` is a valid C string; `out` is a valid pointer.
 */
enum SfStatus sf_corpus_load(const char *path, struct SfCorpus **out);

/**
 * # Safety
 * `corpus` is null or a handle from `sf_corpus_load` not yet freed.
 */
void sf_corpus_free(struct SfCorpus *corpus);

/**
 * Number of sentences, 0 for a null handle.
 *
 * # Safety
 * `corpus` is null or a live handle.
 */
size_t sf_corpus_len(const struct SfCorpus *corpus);

/**
 * Number of gold MWEs, 0 for a null handle.
 *
 * # Safety
 * `corpus` is null or a live handle.
 */
size_t sf_corpus_mwe_count(const struct SfCorpus *corpus);

/**
 * Loads a token probability file.
 *
 * # Safety
 * `path` is a valid C string; `out` is a valid pointer.
 */
enum SfStatus sf_probabilities_load(const char *path, struct SfProbabilities **out);

/**
 * Lexicon-lookup baseline: builds a lexicon from the TRAIN sentences of
 * `train` and scores every sentence of `target`.
 *
 * # Safety
 * Handles are live; `out` is a valid pointer.
 */
enum SfStatus sf_probabilities_baseline(const struct SfCorpus *train,
                                        const struct SfCorpus *target,
                                        struct SfProbabilities **out);

/**
 * # Safety
 * `probs` is null or a live handle.
 */
void sf_probabilities_free(struct SfProbabilities *probs);

/**
 * Reconstructs MWEs for every corpus sentence that has probabilities. With
 * `dep_filter`, discontinuous candidates are checked against dependency
 * distances computed from the corpus heads.
 *
 * # Safety
 * Handles are live; `out` is a valid pointer.
 */
enum SfStatus sf_reconstruct(const struct SfCorpus *corpus,
                             const struct SfProbabilities *probs,
                             struct SfThresholds thresholds,
                             enum SfOverlapPolicy policy,
                             bool dep_filter,
                             struct SfPredictions **out);

/**
 * Grid search over `lo:hi:step` on the DEV sentences of `corpus`.
 *
 * # Safety
 * Handles are live; `grid` is a valid C string; `best` is a valid pointer.
 */
enum SfStatus sf_tune(const struct SfCorpus *corpus,
                      const struct SfProbabilities *probs,
                      const char *grid,
                      enum SfOverlapPolicy policy,
                      bool dep_filter,
                      struct SfThresholds *best);

/**
 * Total number of predicted MWEs, 0 for a null handle.
 *
 * # Safety
 * `predictions` is null or a live handle.
 */
size_t sf_predictions_count(const struct SfPredictions *predictions);

/**
 * # Safety
 * `predictions` is a live handle; `path` is a valid C string.
 */
enum SfStatus sf_predictions_write(const struct SfPredictions *predictions, const char *path);

/**
 * # Safety
 * `predictions` is null or a live handle.
 */
void sf_predictions_free(struct SfPredictions *predictions);

/**
 * Exact-match evaluation against the sentences of `gold`.
 *
 * # Safety
 * Handles are live; `out` is a valid pointer.
 */
enum SfStatus sf_evaluate(const struct SfPredictions *predictions,
                          const struct SfCorpus *gold,
                          struct SfScores *out);

/**
 * Writes the checksummed projection artifact of `corpus`. When
 * `checksum_out` is non-null it receives the 64 hex digits and a NUL, so it
 * must hold at least 65 bytes.
 *
 * # Safety
 * `corpus` is live; strings are valid; `checksum_out` is null or 65 bytes.
 */
enum SfStatus sf_artifact_write(const struct SfCorpus *corpus,
                                const char *version,
                                const char *path,
                                char *checksum_out);

/**
 * Reads an artifact and checks its digest. A mismatch returns
 * `SF_STATUS_INTEGRITY`.
 *
 * # Safety
 * `path` is a valid C string.
 */
enum SfStatus sf_artifact_verify(const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPANFORGE_H */
