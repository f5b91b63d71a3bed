#ifndef GENIMG_EVAL_H
#define GENIMG_EVAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define GE_ALTERNATIVE_TWO_SIDED 0

#define GE_ALTERNATIVE_GREATER 1

#define GE_ALTERNATIVE_LESS 2

#define GE_TTEST_POOLED 0

#define GE_TTEST_WELCH 1

/**
 * Result of every call.
 */
typedef enum GeStatus {
  GE_STATUS_OK = 0,
  /**
   * A required pointer was null, a string was not UTF-8 or a code was unknown.
   */
  GE_STATUS_INVALID_ARGUMENT = 1,
  /**
   * Input data failed validation (shape, schema, non-finite values).
   */
  GE_STATUS_INPUT = 2,
  /**
   * A numerical failure (non-convergent solve, out-of-range result).
   */
  GE_STATUS_NUMERICAL = 3,
  /**
   * The input is valid but the quantity is undefined (zero baseline distance).
   */
  GE_STATUS_DEGENERATE = 4,
  GE_STATUS_IO = 5,
  GE_STATUS_PANIC = 6,
} GeStatus;

/**
 * Opaque embedding matrix.
 */
typedef struct GeEmbeddingSet GeEmbeddingSet;

/**
 * Opaque fitted Gaussian.
 */
typedef struct GeGaussian GeGaussian;

/**
 * Opaque visual Turing test response table.
 */
typedef struct GeVttStudy GeVttStudy;

/**
 * Outcome of a hypothesis test. `df` is NaN for tests without degrees of freedom.
 */
typedef struct GeTestResult {
  double statistic;
  double p_value;
  double df;
  bool reject;
  bool degenerate;
} GeTestResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *ge_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ge_version(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void ge_string_free(char *s);

/**
 * Loads an NPY or CSV embedding file (and its `.meta.json` sidecar if present).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum GeStatus ge_embedding_load(const char *path, struct GeEmbeddingSet **out);

/**
 * Copies an `n x d` row-major matrix into a new embedding set.
 *
 * # Safety
 * `data` must point to `n * d` doubles; `out` must be writable.
 */
enum GeStatus ge_embedding_new(const double *data, size_t n, size_t d, struct GeEmbeddingSet **out);

/**
 * # Safety
 * `set` must be a live handle; `n` and `d` must be writable.
 */
enum GeStatus ge_embedding_shape(const struct GeEmbeddingSet *set, size_t *n, size_t *d);

/**
 * # Safety
 * `set` must be null or a handle not yet freed.
 */
void ge_embedding_free(struct GeEmbeddingSet *set);

/**
 * Mean and unbiased covariance of an embedding set.
 *
 * # Safety
 * `set` must be a live handle; `out` must be writable.
 */
enum GeStatus ge_gaussian_fit(const struct GeEmbeddingSet *set, struct GeGaussian **out);

/**
 * # Safety
 * `g` must be null or a handle not yet freed.
 */
void ge_gaussian_free(struct GeGaussian *g);

/**
 * Squared Fréchet distance between two fitted Gaussians.
 *
 * # Safety
 * `g1`, `g2` must be live handles; `out` must be writable.
 */
enum GeStatus ge_frechet_distance(const struct GeGaussian *g1,
                                  const struct GeGaussian *g2,
                                  double *out);

/**
 * Relative Fréchet distance with the real set split by `seed`.
 *
 * # Safety
 * `real`, `gen` must be live handles; `out` must be writable.
 */
enum GeStatus ge_relative_fd(const struct GeEmbeddingSet *real,
                             const struct GeEmbeddingSet *gen,
                             uint64_t seed,
                             double *out);

/**
 * # Safety
 * `x` and `y` must point to `n` doubles each; `out` must be writable.
 */
enum GeStatus ge_paired_t_test(const double *x,
                               const double *y,
                               size_t n,
                               int alternative_code,
                               double alpha,
                               struct GeTestResult *out);

/**
 * # Safety
 * `a` must point to `na` doubles, `b` to `nb`; `out` must be writable.
 */
enum GeStatus ge_two_sample_t_test(const double *a,
                                   size_t na,
                                   const double *b,
                                   size_t nb,
                                   int alternative_code,
                                   int variant_code,
                                   double alpha,
                                   struct GeTestResult *out);

/**
 * Two-sided two-sample Kolmogorov-Smirnov test.
 *
 * # Safety
 * `a` must point to `na` doubles, `b` to `nb`; `out` must be writable.
 */
enum GeStatus ge_ks_two_sample(const double *a,
                               size_t na,
                               const double *b,
                               size_t nb,
                               double alpha,
                               struct GeTestResult *out);

/**
 * Pearson correlation and its two-sided p-value.
 *
 * # Safety
 * `x` and `y` must point to `n` doubles each; `r` and `p_value` must be writable.
 */
enum GeStatus ge_pearson(const double *x, const double *y, size_t n, double *r, double *p_value);

/**
 * Reads a response CSV. Errors name the offending line.
 *
 * # Safety
 * `study_id` and `path` must be NUL-terminated strings; `out` must be writable.
 */
enum GeStatus ge_vtt_study_load(const char *study_id, const char *path, struct GeVttStudy **out);

/**
 * # Safety
 * `study` must be null or a handle not yet freed.
 */
void ge_vtt_study_free(struct GeVttStudy *study);

/**
 * Study FPR and FNR in percent.
 *
 * # Safety
 * `study` must be a live handle; `fpr` and `fnr` must be writable.
 */
enum GeStatus ge_vtt_rates(const struct GeVttStudy *study, double *fpr, double *fnr);

/**
 * Full study statistics as a JSON document; free it with [`ge_string_free`].
 *
 * # Safety
 * `study` must be a live handle; `out_json` must be writable.
 */
enum GeStatus ge_vtt_analyze(const struct GeVttStudy *study,
                             double alpha_t,
                             double alpha_ks,
                             int variant_code,
                             char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GENIMG_EVAL_H */
