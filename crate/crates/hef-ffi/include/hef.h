#ifndef HEF_H
#define HEF_H

/* Generated by cbindgen from hef-ffi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible entry point.
 */
typedef enum HefStatus {
  HEF_STATUS_OK = 0,
  /**
   * invalid configuration or argument values
   */
  HEF_STATUS_CONFIG = 1,
  /**
   * operand shape/band mismatch
   */
  HEF_STATUS_SHAPE = 2,
  /**
   * numeric failure (normalization, divergence)
   */
  HEF_STATUS_NUMERIC = 3,
  HEF_STATUS_IO = 4,
  HEF_STATUS_PARSE = 5,
  /**
   * a required pointer argument was null
   */
  HEF_STATUS_NULL_ARG = 6,
  /**
   * internal panic caught at the boundary
   */
  HEF_STATUS_PANIC = 7,
} HefStatus;

/**
 * Opaque filter handle: transform plan, motion model, landmark map and
 * the current belief.
 *
 * The filter borrows the plan, so the handle keeps the plan on the heap
 * and drops the filter before the plan.
 */
typedef struct hef_filter_t hef_filter_t;

/**
 * Grid layout shared with the caller; mirrors the Rust `GridSpec`.
 */
typedef struct HefGrid {
  size_t nx;
  size_t ny;
  size_t ntheta;
  double x_min;
  double x_max;
  double y_min;
  double y_max;
} HefGrid;

/**
 * One landmark of the known map.
 */
typedef struct HefLandmark {
  uint32_t id;
  double x;
  double y;
} HefLandmark;

/**
 * One range measurement with known correspondence.
 */
typedef struct HefRangeMeasurement {
  uint32_t landmark_id;
  double range;
  double sigma;
} HefRangeMeasurement;

/**
 * Per-step diagnostics written by `hef_filter_step`.
 */
typedef struct HefStepDiag {
  double mode[3];
  double mean[3];
  double log_z;
  double entropy;
} HefStepDiag;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must point to `len` writable bytes, or be null (query mode).
 */
size_t hef_last_error_message(char *buf, size_t len);

/**
 * Create a filter with a Gaussian prior. `bands` may be null (defaults
 * chosen from the grid) or point to `{n_lambda, n_psi, band_n}`.
 *
 * # Safety
 * `out` must be a valid pointer; `prior_mean`/`prior_sigma` must point to
 * 3 doubles; `bands` to 3 usizes when non-null.
 */
enum HefStatus hef_filter_new(struct HefGrid grid,
                              double sigma_trans,
                              double sigma_rot,
                              const double *prior_mean,
                              const double *prior_sigma,
                              const size_t *bands,
                              struct hef_filter_t **out);

/**
 * Replace the landmark map used for measurement updates.
 *
 * # Safety
 * `landmarks` must point to `len` elements (may be null when `len` is 0).
 */
enum HefStatus hef_filter_set_map(struct hef_filter_t *h,
                                  const struct HefLandmark *landmarks,
                                  size_t len);

/**
 * One predict/update cycle: control `u = {dx, dy, dtheta}` in the body
 * frame, then fold `len` range measurements. `diag` may be null.
 *
 * # Safety
 * `h` must come from `hef_filter_new`; `u` must point to 3 doubles;
 * `measurements` to `len` elements when `len > 0`.
 */
enum HefStatus hef_filter_step(struct hef_filter_t *h,
                               const double *u,
                               const struct HefRangeMeasurement *measurements,
                               size_t len,
                               struct HefStepDiag *diag);

/**
 * Number of doubles in the belief buffer (`nx * ny * ntheta`).
 *
 * # Safety
 * `h` must come from `hef_filter_new`.
 */
size_t hef_filter_belief_len(const struct hef_filter_t *h);

/**
 * Copy the current belief density (row-major over x, y, θ) into `buf`.
 *
 * # Safety
 * `buf` must point to at least `hef_filter_belief_len` doubles.
 */
enum HefStatus hef_filter_belief(const struct hef_filter_t *h, double *buf, size_t len);

/**
 * Log belief density at a pose `{x, y, theta}` (floored, never −inf).
 *
 * # Safety
 * `pose` must point to 3 doubles and `out` to one double.
 */
enum HefStatus hef_filter_log_at(const struct hef_filter_t *h, const double *pose, double *out);

/**
 * Destroy a filter handle. Null is a no-op.
 *
 * # Safety
 * `h` must come from `hef_filter_new` and not be used afterwards.
 */
void hef_filter_free(struct hef_filter_t *h);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* HEF_H */
