#ifndef PROOTKIT_H
#define PROOTKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PrkMethod {
  PRK_METHOD_PLAIN = 0,
  PRK_METHOD_IN = 1,
  PRK_METHOD_ITER39 = 2,
  PRK_METHOD_COUPLED = 3,
  PRK_METHOD_VARIANT = 4,
} PrkMethod;

typedef enum PrkStatus {
  PRK_STATUS_OK = 0,
  PRK_STATUS_NULL_POINTER = 1,
  PRK_STATUS_INVALID_ARGUMENT = 2,
  PRK_STATUS_DIMENSION_MISMATCH = 3,
  PRK_STATUS_SINGULAR = 4,
  PRK_STATUS_NO_CONVERGENCE = 5,
  PRK_STATUS_BREAKDOWN = 6,
  PRK_STATUS_IO = 7,
  PRK_STATUS_PARSE = 8,
  PRK_STATUS_PANIC = 9,
} PrkStatus;

/**
 * Opaque dense matrix.
 */
typedef struct PrkMatrix PrkMatrix;

typedef struct PrkRootOptions {
  size_t p;
  enum PrkMethod method;
  double tol;
  double h_tol;
  size_t max_iter;
  /**
   * Iterate on A^(1/2)/||A^(1/2)||_F instead of A.
   */
  bool precondition;
  /**
   * Return the root of A rather than of the matrix iterated on.
   */
  bool recover;
} PrkRootOptions;

typedef struct PrkRootInfo {
  size_t iterations;
  /**
   * Relative residual of the returned root against its own target.
   */
  double final_residual;
  uint64_t matmuls;
  uint64_t lus;
  /**
   * Counted flops of the iteration, preconditioning excluded.
   */
  double flops;
} PrkRootInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or NULL. The pointer stays
 * valid until the next call into this library on the same thread.
 */
const char *prk_last_error_message(void);

/**
 * Copies `rows * cols` row-major values into a new matrix.
 *
 * # Safety
 * `data` must point to `rows * cols` readable doubles; `out` must be writable.
 */
enum PrkStatus prk_matrix_from_rows(size_t rows,
                                    size_t cols,
                                    const double *data,
                                    struct PrkMatrix **out);

/**
 * Reads a MatrixMarket file (coordinate or array, real/integer/pattern).
 *
 * # Safety
 * `path` must be a NUL-terminated UTF-8 string; `out` must be writable.
 */
enum PrkStatus prk_matrix_read_mm(const char *path, struct PrkMatrix **out);

/**
 * # Safety
 * `m` must be NULL or a handle from this library that was not freed yet.
 */
void prk_matrix_free(struct PrkMatrix *m);

/**
 * # Safety
 * `m` must be a live handle.
 */
size_t prk_matrix_rows(const struct PrkMatrix *m);

/**
 * # Safety
 * `m` must be a live handle.
 */
size_t prk_matrix_cols(const struct PrkMatrix *m);

/**
 * Copies the entries row-major into `buf`, which holds `len` doubles.
 *
 * # Safety
 * `m` must be a live handle and `buf` must point to `len` writable doubles.
 */
enum PrkStatus prk_matrix_copy_to(const struct PrkMatrix *m, double *buf, size_t len);

struct PrkRootOptions prk_root_options_default(size_t p);

/**
 * Computes a `p`-th root of `a`. On `PRK_STATUS_OK` stores a new handle in
 * `out` and fills `info` if it is non-NULL. On `NO_CONVERGENCE` or
 * `BREAKDOWN`, `info` still describes the last iterate and `out` is left
 * untouched.
 *
 * # Safety
 * `a` must be a live handle, `opts` readable, `out` writable, `info` NULL or
 * writable.
 */
enum PrkStatus prk_root(const struct PrkMatrix *a,
                        const struct PrkRootOptions *opts,
                        struct PrkMatrix **out,
                        struct PrkRootInfo *info);

/**
 * Number of matrix products the evaluation plan for `P_d` spends.
 */
size_t prk_plan_cost(size_t d);

/**
 * Factored form of `P_d` as a new string; free with `prk_string_free`.
 */
char *prk_plan_form(size_t d);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not yet freed.
 */
void prk_string_free(char *s);

/**
 * Per-iteration cost of `method` as the exact fraction `num/den` of `n^3`.
 *
 * # Safety
 * `num` and `den` must be writable.
 */
enum PrkStatus prk_cost_coeff(enum PrkMethod method, size_t p, int64_t *num, int64_t *den);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROOTKIT_H */
