#ifndef LEXBRIDGE_H
#define LEXBRIDGE_H

/* Generated by cbindgen; edit the Rust source instead. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum LexStatus {
  LEX_STATUS_OK = 0,
  LEX_STATUS_NULL_ARGUMENT = 1,
  LEX_STATUS_INVALID_UTF8 = 2,
  LEX_STATUS_IO = 3,
  LEX_STATUS_PARSE = 4,
  LEX_STATUS_INVALID_INPUT = 5,
  LEX_STATUS_NUMERIC = 6,
  LEX_STATUS_NOT_FOUND = 7,
} LexStatus;

/**
 * Policy for words present in both vocabularies when building the
 * enhanced space.
 */
typedef enum LexConflict {
  LEX_CONFLICT_CORPUS = 0,
  LEX_CONFLICT_KB = 1,
  LEX_CONFLICT_AVERAGE = 2,
} LexConflict;

/**
 * Owned word-to-synset map. Opaque; free with `lexbridge_sense_map_free`.
 */
typedef struct LexSenseMap LexSenseMap;

/**
 * Owned embedding space. Opaque; free with `lexbridge_space_free`.
 */
typedef struct LexSpace LexSpace;

/**
 * Similarity evaluation outcome.
 */
typedef struct LexEvalResult {
  double pearson;
  double spearman;
  uint64_t covered;
  uint64_t total;
} LexEvalResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread; never free it.
 */
const char *lexbridge_last_error(void);

/**
 * Library version as a static NUL-terminated string; never free it.
 */
const char *lexbridge_version(void);

/**
 * Loads an embedding space from a word2vec-style text file into `*out`.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 * On `Ok` the caller owns `*out` and must free it with
 * `lexbridge_space_free`.
 */
enum LexStatus lexbridge_space_load(const char *path, struct LexSpace **out);

/**
 * Writes a space back to the text format.
 *
 * # Safety
 * `space` must be a live handle from this library; `path` a valid string.
 */
enum LexStatus lexbridge_space_save(const struct LexSpace *space, const char *path);

/**
 * Releases a space handle. A null pointer is a no-op.
 *
 * # Safety
 * `space` must be null or a handle not yet freed.
 */
void lexbridge_space_free(struct LexSpace *space);

/**
 * Number of vectors; 0 for a null handle.
 *
 * # Safety
 * `space` must be null or a live handle.
 */
size_t lexbridge_space_len(const struct LexSpace *space);

/**
 * Vector dimensionality; 0 for a null handle.
 *
 * # Safety
 * `space` must be null or a live handle.
 */
size_t lexbridge_space_dim(const struct LexSpace *space);

/**
 * Whether `token` has a vector. False on null or non-UTF-8 arguments.
 *
 * # Safety
 * `space` must be null or a live handle; `token` null or a valid string.
 */
bool lexbridge_space_contains(const struct LexSpace *space, const char *token);

/**
 * Copies the vector of `token` into `buf`, which holds `len` doubles;
 * `len` must equal the space dimensionality.
 *
 * # Safety
 * `space` must be a live handle, `token` a valid string, and `buf` writable
 * for `len` doubles.
 */
enum LexStatus lexbridge_space_vector(const struct LexSpace *space,
                                      const char *token,
                                      double *buf,
                                      size_t len);

/**
 * Copies the token at `index` (NUL-terminated) into `buf` of capacity `cap`.
 *
 * # Safety
 * `space` must be a live handle and `buf` writable for `cap` bytes.
 */
enum LexStatus lexbridge_space_token(const struct LexSpace *space,
                                     size_t index,
                                     char *buf,
                                     size_t cap);

/**
 * Cosine similarity between the vectors of two tokens.
 *
 * # Safety
 * `space` must be a live handle, both tokens valid strings, `out` writable.
 */
enum LexStatus lexbridge_space_cosine(const struct LexSpace *space,
                                      const char *token_a,
                                      const char *token_b,
                                      double *out);

/**
 * Loads a `word<TAB>synset,synset` map into `*out`.
 *
 * # Safety
 * `path` must be a valid string and `out` a valid pointer. On `Ok` the
 * caller owns `*out` and must free it with `lexbridge_sense_map_free`.
 */
enum LexStatus lexbridge_sense_map_load(const char *path, struct LexSenseMap **out);

/**
 * Releases a sense map handle. A null pointer is a no-op.
 *
 * # Safety
 * `map` must be null or a handle not yet freed.
 */
void lexbridge_sense_map_free(struct LexSenseMap *map);

/**
 * Number of mapped words; 0 for a null handle.
 *
 * # Safety
 * `map` must be null or a live handle.
 */
size_t lexbridge_sense_map_len(const struct LexSenseMap *map);

/**
 * Averages synset vectors into a word-level space.
 *
 * # Safety
 * `kb_space` and `map` must be live handles and `out` a valid pointer.
 * On `Ok` the caller owns `*out`.
 */
enum LexStatus lexbridge_compose_words(const struct LexSpace *kb_space,
                                       const struct LexSenseMap *map,
                                       struct LexSpace **out);

/**
 * Runs bridge selection, CCA and union construction in one call.
 * `max_bridges` caps the seed lexicon; `reg` below zero selects the
 * trace-scaled automatic ridge.
 *
 * # Safety
 * All three handles must be live and `out` a valid pointer. On `Ok` the
 * caller owns `*out`.
 */
enum LexStatus lexbridge_enhance(const struct LexSpace *corpus,
                                 const struct LexSpace *kb_words,
                                 const struct LexSenseMap *map,
                                 size_t max_bridges,
                                 double reg,
                                 enum LexConflict conflict,
                                 struct LexSpace **out);

/**
 * Scores a space against a similarity dataset with cosine similarity.
 *
 * # Safety
 * `space` must be a live handle, `dataset_path` a valid string and `out`
 * a valid pointer.
 */
enum LexStatus lexbridge_eval_similarity(const struct LexSpace *space,
                                         const char *dataset_path,
                                         bool lowercase,
                                         struct LexEvalResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LEXBRIDGE_H */
