#ifndef MEDIASERIES_H
#define MEDIASERIES_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum MsStatus {
  MS_STATUS_OK = 0,
  MS_STATUS_NULL_POINTER = 1,
  MS_STATUS_INVALID_ARGUMENT = 2,
  MS_STATUS_IO = 3,
  MS_STATUS_PARSE = 4,
  MS_STATUS_SHAPE_MISMATCH = 5,
  MS_STATUS_NUMERIC = 6,
  MS_STATUS_PANIC = 7,
} MsStatus;

/**
 * A loaded classifier.
 */
typedef struct MsModel MsModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ms_version(void);

/**
 * Message of the last failed call on this thread, or NULL after a
 * successful one. The pointer stays valid until the next call on the
 * same thread.
 */
const char *ms_last_error_message(void);

/**
 * Reads a model file written by the `mediaseries` tool.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MsStatus ms_model_load(const char *path, struct MsModel **out);

/**
 * Parses a model from its JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum MsStatus ms_model_from_json(const char *json, struct MsModel **out);

/**
 * Releases a model. NULL is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void ms_model_free(struct MsModel *model);

/**
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum MsStatus ms_model_num_labels(const struct MsModel *model, size_t *out);

/**
 * Number of token ids every input must have.
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum MsStatus ms_model_sequence_length(const struct MsModel *model, size_t *out);

/**
 * Sigmoid output per label for one padded id sequence.
 *
 * # Safety
 * `ids` must hold `n_ids` values and `out` room for `out_len` values.
 */
enum MsStatus ms_model_forward(const struct MsModel *model,
                               const uint32_t *ids,
                               size_t n_ids,
                               double *out,
                               size_t out_len);

/**
 * Score of a single-output model for one padded id sequence.
 *
 * # Safety
 * `ids` must hold `n_ids` values and `out` be a valid pointer.
 */
enum MsStatus ms_model_gbv_probability(const struct MsModel *model,
                                       const uint32_t *ids,
                                       size_t n_ids,
                                       double *out);

/**
 * Moving-average decomposition of `n` evenly spaced values. Each output
 * array holds `n` values; undefined trend and residual entries are NaN.
 *
 * # Safety
 * `values` must hold `n` values and each output room for `n` values.
 */
enum MsStatus ms_decompose_ma(const double *values,
                              size_t n,
                              size_t period,
                              double *trend,
                              double *seasonal,
                              double *residual);

/**
 * Cross-correlation of two aligned series for lags `-max_lag..=max_lag`.
 * `correlations` receives `2 * max_lag + 1` values, lowest lag first.
 *
 * # Safety
 * `x` and `y` must hold `n` values, `correlations` room for
 * `2 * max_lag + 1` values and `peak_lag` be a valid pointer.
 */
enum MsStatus ms_ccf(const double *x,
                     const double *y,
                     size_t n,
                     size_t max_lag,
                     double *correlations,
                     int64_t *peak_lag);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MEDIASERIES_H */
