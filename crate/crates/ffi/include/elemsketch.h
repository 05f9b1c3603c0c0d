#ifndef ELEMSKETCH_H
#define ELEMSKETCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Solver selector for `es_sparse_pca`.
 */
typedef enum EsSpcaMethod {
  ES_SPCA_METHOD_EXACT = 0,
  ES_SPCA_METHOD_MAX_R = 1,
  ES_SPCA_METHOD_ITER_SPARSE = 2,
  ES_SPCA_METHOD_BRUTE_FORCE = 3,
} EsSpcaMethod;

/**
 * Result code of every fallible call.
 */
typedef enum EsStatus {
  ES_STATUS_OK = 0,
  ES_STATUS_NULL_POINTER = 1,
  ES_STATUS_INVALID_PARAMETER = 2,
  ES_STATUS_DIMENSION = 3,
  ES_STATUS_DEGENERATE = 4,
  ES_STATUS_NOT_CONVERGED = 5,
  ES_STATUS_PARSE = 6,
  ES_STATUS_IO = 7,
  ES_STATUS_BUFFER_TOO_SMALL = 8,
  ES_STATUS_INTERNAL = 9,
} EsStatus;

/**
 * Opaque matrix handle.
 */
typedef struct EsMatrix EsMatrix;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. Valid until the
 * next call into this library from the same thread.
 */
const char *es_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *es_version(void);

/**
 * Dense rows×cols matrix copied from row-major `data`.
 *
 * # Safety
 * `data` must point to rows·cols doubles; `out` must be writable.
 */
enum EsStatus es_matrix_dense_new(size_t rows,
                                  size_t cols,
                                  const double *data,
                                  struct EsMatrix **out);

/**
 * Sparse matrix from zero-based coordinate triples.
 *
 * # Safety
 * `row_idx`, `col_idx` and `values` must each point to `nnz` elements.
 */
enum EsStatus es_matrix_sparse_new(size_t rows,
                                   size_t cols,
                                   size_t nnz,
                                   const size_t *row_idx,
                                   const size_t *col_idx,
                                   const double *values,
                                   struct EsMatrix **out);

/**
 * Loads a `.mtx` (MatrixMarket coordinate) or `.csv` (dense) file.
 *
 * # Safety
 * `path` must be a NUL-terminated string.
 */
enum EsStatus es_matrix_load(const char *path, struct EsMatrix **out);

/**
 * Releases a handle; NULL is ignored.
 *
 * # Safety
 * `m` must be NULL or a handle not yet freed.
 */
void es_matrix_free(struct EsMatrix *m);

/**
 * Row count, column count and stored nonzeros.
 *
 * # Safety
 * `m` must be a live handle; `rows`, `cols`, `nnz` writable or NULL.
 */
enum EsStatus es_matrix_shape(const struct EsMatrix *m, size_t *rows, size_t *cols, size_t *nnz);

/**
 * Copies the matrix into a row-major buffer of `len` ≥ rows·cols doubles.
 *
 * # Safety
 * `buf` must point to `len` writable doubles.
 */
enum EsStatus es_matrix_to_dense(const struct EsMatrix *m, double *buf, size_t len);

/**
 * Column-centered copy.
 *
 * # Safety
 * `m` must be a live handle; `out` writable.
 */
enum EsStatus es_matrix_center(const struct EsMatrix *m, struct EsMatrix **out);

/**
 * Mixing weight α* minimizing the sampling bound objective at accuracy
 * `eps` (σ_min² taken as 0).
 *
 * # Safety
 * `m` must be a live handle; outputs writable (`objective` may be NULL).
 */
enum EsStatus es_optimize_alpha(const struct EsMatrix *m,
                                double eps,
                                double *alpha_star,
                                double *objective);

/**
 * Hybrid-distribution sketch with `s` draws.
 *
 * # Safety
 * `m` must be a live handle; `out` writable.
 */
enum EsStatus es_sketch_hybrid(const struct EsMatrix *m,
                               double alpha,
                               uint64_t s,
                               uint64_t seed,
                               struct EsMatrix **out);

/**
 * Uniform sketch over all m·n positions with `s` draws.
 *
 * # Safety
 * `m` must be a live handle; `out` writable.
 */
enum EsStatus es_sketch_uniform(const struct EsMatrix *m,
                                uint64_t s,
                                uint64_t seed,
                                struct EsMatrix **out);

/**
 * Leverage-score sketch from the top-`rank` factors, `s` draws.
 *
 * # Safety
 * `m` must be a live handle; `out` writable.
 */
enum EsStatus es_sketch_leverage(const struct EsMatrix *m,
                                 size_t rank,
                                 uint64_t s,
                                 uint64_t seed,
                                 struct EsMatrix **out);

/**
 * Thresholded copy with the cutoff chosen for accuracy `eps`.
 *
 * # Safety
 * `m` must be a live handle; `out` writable; `delta` writable or NULL.
 */
enum EsStatus es_sketch_threshold(const struct EsMatrix *m,
                                  double eps,
                                  double *delta,
                                  struct EsMatrix **out);

/**
 * ‖A − B‖₂ and ‖AᵀA − BᵀB‖₂.
 *
 * # Safety
 * `a`, `b` must be live handles; outputs writable or NULL.
 */
enum EsStatus es_spectral_deviation(const struct EsMatrix *a,
                                    const struct EsMatrix *b,
                                    double *op_norm_diff,
                                    double *gram_diff);

/**
 * `k` r-sparse components written to `loadings` as a row-major n×k array
 * (`len` ≥ n·k).
 *
 * # Safety
 * `m` must be a live handle; `loadings` must point to `len` writable doubles.
 */
enum EsStatus es_sparse_pca(const struct EsMatrix *m,
                            enum EsSpcaMethod method,
                            size_t k,
                            size_t r,
                            uint64_t seed,
                            double *loadings,
                            size_t len);

/**
 * trace(VᵀAᵀAV) for a row-major n×k loading array.
 *
 * # Safety
 * `loadings` must point to n·k doubles with n = cols(A); `out` writable.
 */
enum EsStatus es_variance(const struct EsMatrix *m, const double *loadings, size_t k, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ELEMSKETCH_H */
