#ifndef SIGSCENE_H
#define SIGSCENE_H

/* Generated by cbindgen from crates/ffi. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SgsStatus {
  SGS_STATUS_OK = 0,
  SGS_STATUS_NULL_POINTER = 1,
  SGS_STATUS_INVALID_UTF8 = 2,
  SGS_STATUS_INVALID_ARGUMENT = 3,
  SGS_STATUS_IO = 4,
  SGS_STATUS_PARSE = 5,
  SGS_STATUS_NUMERICAL = 6,
  SGS_STATUS_ID_MISMATCH = 7,
  SGS_STATUS_BUFFER_TOO_SMALL = 8,
  SGS_STATUS_PANIC = 99,
} SgsStatus;

typedef enum SgsMethod {
  SGS_METHOD_GAUSSIAN_COSINE = 0,
  SGS_METHOD_CHAR_FN = 1,
} SgsMethod;

/**
 * Opaque set of named embeddings.
 */
typedef struct SgsEmbeddings SgsEmbeddings;

typedef struct SgsVerdict {
  double eigenvalue_ratio;
  double mean_norm;
  bool is_isotropic;
  bool mean_near_zero;
  bool passes;
} SgsVerdict;

typedef struct SgsScore {
  double precision;
  double maa;
  double score;
} SgsScore;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library from the same thread.
 */
const char *sgs_last_error_message(void);

/**
 * Loads an embeddings JSON Lines file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SgsStatus sgs_embeddings_load(const char *path, struct SgsEmbeddings **out);

/**
 * Builds a set from `n` row-major rows of dimension `d`. Images are named
 * by their row index.
 *
 * # Safety
 * `data` must point to `n * d` doubles and `out` must be valid.
 */
enum SgsStatus sgs_embeddings_from_rows(const double *data,
                                        size_t n,
                                        size_t d,
                                        struct SgsEmbeddings **out);

/**
 * # Safety
 * `h` must come from this library and not be used afterwards. NULL is a
 * no-op.
 */
void sgs_embeddings_free(struct SgsEmbeddings *h);

/**
 * Number of images, or 0 for NULL.
 *
 * # Safety
 * `h` must be NULL or a live handle.
 */
size_t sgs_embeddings_len(const struct SgsEmbeddings *h);

/**
 * Embedding dimension, or 0 for NULL.
 *
 * # Safety
 * `h` must be NULL or a live handle.
 */
size_t sgs_embeddings_dim(const struct SgsEmbeddings *h);

/**
 * Copies row `i` into `buf` (`len ≥ dim`).
 *
 * # Safety
 * `h` must be a live handle and `buf` must hold `len` doubles.
 */
enum SgsStatus sgs_embeddings_row(const struct SgsEmbeddings *h, size_t i, double *buf, size_t len);

/**
 * New handle with every row scaled to norm √d.
 *
 * # Safety
 * `h` must be a live handle and `out` valid.
 */
enum SgsStatus sgs_embeddings_normalize(const struct SgsEmbeddings *h, struct SgsEmbeddings **out);

/**
 * Writes the row-major `n × n` similarity matrix of the normalized set.
 * `t_grid` may be NULL to use the default grid; it is ignored for the
 * cosine method.
 *
 * # Safety
 * `h` must be live, `t_grid` must hold `t_len` doubles (or be NULL) and
 * `out` must hold `out_len` doubles.
 */
enum SgsStatus sgs_similarity(const struct SgsEmbeddings *h,
                              enum SgsMethod method,
                              const double *t_grid,
                              size_t t_len,
                              double *out,
                              size_t out_len);

/**
 * Runs the clustering pipeline with default settings and the given seed,
 * writing one label per image (`-1` for outliers).
 *
 * # Safety
 * `h` must be live and `labels` must hold `len` values.
 */
enum SgsStatus sgs_cluster(const struct SgsEmbeddings *h,
                           uint64_t seed,
                           int64_t *labels,
                           size_t len);

/**
 * Eigenvalue-ratio and mean-norm check on `n` row-major rows of
 * dimension `d`.
 *
 * # Safety
 * `data` must hold `n * d` doubles and `out` must be valid.
 */
enum SgsStatus sgs_validate_cluster(const double *data,
                                    size_t n,
                                    size_t d,
                                    double ratio_max,
                                    double mean_max,
                                    struct SgsVerdict *out);

/**
 * Epps-Pulley normality statistic of a standardized 1-D sample.
 *
 * # Safety
 * `sample` must hold `n` doubles and `out` must be valid.
 */
enum SgsStatus sgs_epps_pulley(const double *sample, size_t n, double *out);

/**
 * Scores a submission CSV against a ground-truth JSON Lines file with the
 * default 1..10 degree ladder.
 *
 * # Safety
 * Both paths must be NUL-terminated strings and `out` must be valid.
 */
enum SgsStatus sgs_score_files(const char *submission,
                               const char *ground_truth,
                               struct SgsScore *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SIGSCENE_H */
