#ifndef PIDMD_H
#define PIDMD_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PidmdStatus {
  PIDMD_STATUS_OK = 0,
  PIDMD_STATUS_NULL_POINTER = 1,
  PIDMD_STATUS_INVALID_ARGUMENT = 2,
  PIDMD_STATUS_DIMENSION_MISMATCH = 3,
  PIDMD_STATUS_PARSE = 4,
  PIDMD_STATUS_IO = 5,
  PIDMD_STATUS_NUMERICAL = 6,
  PIDMD_STATUS_DEGENERATE = 7,
  PIDMD_STATUS_SIZE_LIMIT = 8,
  PIDMD_STATUS_NEAR_SINGULAR = 9,
  PIDMD_STATUS_PANIC = 10,
} PidmdStatus;

typedef enum PidmdTimeKind {
  PIDMD_TIME_KIND_DISCRETE = 0,
  PIDMD_TIME_KIND_CONTINUOUS = 1,
} PidmdTimeKind;

/**
 * Dense complex matrix.
 */
typedef struct PidmdMatrix PidmdMatrix;

/**
 * Fitted model together with the time semantics of its data.
 */
typedef struct PidmdModel PidmdModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the next call.
 */
const char *pidmd_last_error(void);

/**
 * Builds a `rows x cols` matrix from row-major parts; `im` may be null for real data.
 *
 * # Safety
 * `re` (and `im` when non-null) must point to `rows * cols` doubles.
 */
enum PidmdStatus pidmd_matrix_new(size_t rows,
                                  size_t cols,
                                  const double *re,
                                  const double *im,
                                  struct PidmdMatrix **out);

/**
 * Reads a matrix from a CSV file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum PidmdStatus pidmd_matrix_load_csv(const char *path, struct PidmdMatrix **out);

/**
 * # Safety
 * `m` must be a live handle; `rows` and `cols` valid pointers.
 */
enum PidmdStatus pidmd_matrix_shape(const struct PidmdMatrix *m, size_t *rows, size_t *cols);

/**
 * Copies entries out row-major; `im` may be null to skip imaginary parts.
 *
 * # Safety
 * `re` (and `im` when non-null) must have room for `rows * cols` doubles.
 */
enum PidmdStatus pidmd_matrix_read(const struct PidmdMatrix *m, double *re, double *im);

/**
 * # Safety
 * `m` must be null or a handle from this library, not freed before.
 */
void pidmd_matrix_free(struct PidmdMatrix *m);

/**
 * Fits a model. `spec_json` selects the solver, e.g.
 * `{"manifold":"circulant","variant":{"kind":"plain"}}` or
 * `{"manifold":"triangular","method":"rq_stable","orientation":"upper"}`.
 *
 * # Safety
 * `x`, `y` must be live handles, `spec_json` a NUL-terminated string, `out` valid.
 */
enum PidmdStatus pidmd_fit(const struct PidmdMatrix *x,
                           const struct PidmdMatrix *y,
                           const char *spec_json,
                           enum PidmdTimeKind time_kind,
                           double dt,
                           struct PidmdModel **out);

/**
 * # Safety
 * `model` must be a live handle and `n` a valid pointer.
 */
enum PidmdStatus pidmd_model_n(const struct PidmdModel *model, size_t *n);

/**
 * Dense `n x n` operator of the model.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum PidmdStatus pidmd_model_operator(const struct PidmdModel *model, struct PidmdMatrix **out);

/**
 * Eigenvalues in canonical order, as a `k x 1` matrix.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum PidmdStatus pidmd_model_eigenvalues(const struct PidmdModel *model, struct PidmdMatrix **out);

/**
 * `||Y - A X||_F` for the fitted operator.
 *
 * # Safety
 * Handles must be live and `value` a valid pointer.
 */
enum PidmdStatus pidmd_model_residual(const struct PidmdModel *model,
                                      const struct PidmdMatrix *x,
                                      const struct PidmdMatrix *y,
                                      double *value);

/**
 * Trajectory with `steps + 1` columns from the `n x 1` state `x0`, using the
 * model's time kind and step.
 *
 * # Safety
 * Handles must be live and `out` a valid pointer.
 */
enum PidmdStatus pidmd_model_predict(const struct PidmdModel *model,
                                     const struct PidmdMatrix *x0,
                                     size_t steps,
                                     struct PidmdMatrix **out);

/**
 * Leading `k` resolvent gains at `omega`, written to `gains`; `count` receives
 * how many were written (at most `k`).
 *
 * # Safety
 * `gains` must have room for `k` doubles; other pointers valid.
 */
enum PidmdStatus pidmd_model_resolvent_gains(const struct PidmdModel *model,
                                             double omega,
                                             size_t k,
                                             double *gains,
                                             size_t *count);

/**
 * JSON serialization of the model; release with [`pidmd_string_free`].
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum PidmdStatus pidmd_model_to_json(const struct PidmdModel *model, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, not freed before.
 */
void pidmd_string_free(char *s);

/**
 * # Safety
 * `model` must be null or a handle from this library, not freed before.
 */
void pidmd_model_free(struct PidmdModel *model);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PIDMD_H */
