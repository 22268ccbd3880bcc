#ifndef GAUSSROUGH_H
#define GAUSSROUGH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum GrStatus {
  GR_STATUS_OK = 0,
  GR_STATUS_NULL_POINTER = 1,
  GR_STATUS_INVALID_ARGUMENT = 2,
  GR_STATUS_OUT_OF_DOMAIN = 3,
  GR_STATUS_NOT_PSD = 4,
  GR_STATUS_NUMERICAL = 5,
  GR_STATUS_BUFFER_TOO_SMALL = 6,
  GR_STATUS_PANIC = 7,
} GrStatus;

/**
 * Variation modes, mirroring the library's exact / lower / greedy.
 */
typedef enum GrMode {
  GR_MODE_EXACT = 0,
  GR_MODE_LOWER = 1,
  GR_MODE_GREEDY = 2,
} GrMode;

/**
 * Opaque covariance model.
 */
typedef struct GrModel GrModel;

/**
 * Opaque signature record of a piecewise-linear path.
 */
typedef struct GrSignature GrSignature;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last error on this thread, or NULL. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *gr_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void gr_string_free(char *s);

/**
 * Builds a model from a spec string such as `fbm:0.3` or `bifbm:0.6,0.7`.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum GrStatus gr_model_new(const char *spec, struct GrModel **out);

/**
 * Restricts a model to `[lo, hi]`.
 *
 * # Safety
 * `m` must be a live handle.
 */
enum GrStatus gr_model_set_domain(struct GrModel *m, double lo, double hi);

/**
 * # Safety
 * `m` must be NULL or a handle from [`gr_model_new`] not yet freed.
 */
void gr_model_free(struct GrModel *m);

/**
 * Nominal variation exponent of the model.
 *
 * # Safety
 * `m` must be a live handle and `out` writable.
 */
enum GrStatus gr_model_rho(const struct GrModel *m, double *out);

/**
 * R(s, t).
 *
 * # Safety
 * `m` must be a live handle and `out` writable.
 */
enum GrStatus gr_model_eval(const struct GrModel *m, double s, double t, double *out);

/**
 * Variance of the increment over `[s, t]`.
 *
 * # Safety
 * `m` must be a live handle and `out` writable.
 */
enum GrStatus gr_model_sigma2(const struct GrModel *m, double s, double t, double *out);

/**
 * Rectangular increment over `[s, t] × [u, v]`.
 *
 * # Safety
 * `m` must be a live handle and `out` writable.
 */
enum GrStatus gr_model_rect_increment(const struct GrModel *m,
                                      double s,
                                      double t,
                                      double u,
                                      double v,
                                      double *out);

/**
 * p-variation of a sampled scalar path.
 *
 * # Safety
 * `x` must point to `n` readable values and `out` be writable.
 */
enum GrStatus gr_pvar_1d(const double *x, size_t n, double p, double *out);

/**
 * Mixed (gamma, rho)-variation of the covariance over the square spanned
 * by a grid of `n` increasing points used on both axes.
 *
 * # Safety
 * `m` must be a live handle, `grid` must hold `n` values, `out` writable.
 */
enum GrStatus gr_mixed_variation(const struct GrModel *m,
                                 const double *grid,
                                 size_t n,
                                 double gamma,
                                 double rho,
                                 enum GrMode mode,
                                 double *out);

/**
 * Exact samples of `paths` independent `d`-dimensional paths on `grid`.
 * `out` receives `paths × d × n` values, path-major then component, and
 * must hold `out_len` of them.
 *
 * # Safety
 * `m` live, `grid` holds `n` values, `out` holds `out_len` values.
 */
enum GrStatus gr_sample_cholesky(const struct GrModel *m,
                                 const double *grid,
                                 size_t n,
                                 size_t d,
                                 size_t paths,
                                 uint64_t seed,
                                 double *out,
                                 size_t out_len);

/**
 * Signature up to `depth` of the piecewise-linear path through `n` points
 * `values[i * d + c]` at `times[i]`.
 *
 * # Safety
 * `times` holds `n`, `values` holds `n * d` values; `out` writable.
 */
enum GrStatus gr_signature_new(const double *times,
                               const double *values,
                               size_t n,
                               size_t d,
                               size_t depth,
                               struct GrSignature **out);

/**
 * # Safety
 * `s` must be NULL or a handle from [`gr_signature_new`] not yet freed.
 */
void gr_signature_free(struct GrSignature *s);

/**
 * Copies level `level` of the increment between grid indices `s ≤ t`
 * (`d^level` values, row-major words) into `out`.
 *
 * # Safety
 * `sig` live; `out` holds `out_len` values.
 */
enum GrStatus gr_signature_level(const struct GrSignature *sig,
                                 size_t s,
                                 size_t t,
                                 size_t level,
                                 double *out,
                                 size_t out_len);

/**
 * Lévy area matrix (`d × d`, row-major) of the increment between grid
 * indices `s ≤ t`.
 *
 * # Safety
 * `sig` live; `out` holds `out_len` values.
 */
enum GrStatus gr_levy_area(const struct GrSignature *sig,
                           size_t s,
                           size_t t,
                           double *out,
                           size_t out_len);

/**
 * Classification report of the model as a JSON string, released with
 * [`gr_string_free`].
 *
 * # Safety
 * `m` live and `out` writable.
 */
enum GrStatus gr_classify(const struct GrModel *m, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GAUSSROUGH_H */
