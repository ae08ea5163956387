#ifndef THETAFORGE_H
#define THETAFORGE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TfStatus {
  TF_STATUS_OK = 0,
  TF_STATUS_NULL_POINTER = 1,
  TF_STATUS_INVALID_ARGUMENT = 2,
  TF_STATUS_INVALID_PERIOD_MATRIX = 3,
  TF_STATUS_DIMENSION_MISMATCH = 4,
  TF_STATUS_NUMERICAL = 5,
  TF_STATUS_CONFIG = 6,
  TF_STATUS_IO = 7,
  TF_STATUS_PANIC = 8,
} TfStatus;

/**
 * Period matrix handle.
 */
typedef struct TfPeriodMatrix TfPeriodMatrix;

/**
 * Theta jet handle.
 */
typedef struct TfThetaJet TfThetaJet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *tf_last_error_message(void);

/**
 * Builds a period matrix from row-major real and imaginary parts (`genus^2` each).
 *
 * # Safety
 * `re` and `im` must point to `genus * genus` doubles; `out` must be writable.
 */
enum TfStatus tf_period_matrix_new(size_t genus,
                                   const double *re,
                                   const double *im,
                                   struct TfPeriodMatrix **out);

/**
 * The seeded sample `index` of genus `genus`.
 *
 * # Safety
 * `out` must be writable.
 */
enum TfStatus tf_period_matrix_sample(size_t genus,
                                      uint64_t seed,
                                      uint64_t index,
                                      struct TfPeriodMatrix **out);

/**
 * # Safety
 * `tau` must be NULL or a handle from this library.
 */
size_t tf_period_matrix_genus(const struct TfPeriodMatrix *tau);

/**
 * Entry `(j, k)` of the period matrix.
 *
 * # Safety
 * `tau` must be a handle from this library; `re`, `im` writable.
 */
enum TfStatus tf_period_matrix_entry(const struct TfPeriodMatrix *tau,
                                     size_t j,
                                     size_t k,
                                     double *re,
                                     double *im);

/**
 * # Safety
 * `tau` must be NULL or a handle from this library, not freed before.
 */
void tf_period_matrix_free(struct TfPeriodMatrix *tau);

/**
 * Jet of `theta[eps, delta](tau, z)`. Characteristics are strings such as
 * `"(1/2, 0)"`; `z` has `genus` entries (both pointers may be NULL for `z = 0`).
 *
 * # Safety
 * Pointers must be valid as described; `out` writable.
 */
enum TfStatus tf_theta_jet(const struct TfPeriodMatrix *tau,
                           const double *z_re,
                           const double *z_im,
                           const char *eps,
                           const char *delta,
                           struct TfThetaJet **out);

/**
 * # Safety
 * `jet` must be a handle from this library; `re`, `im` writable.
 */
enum TfStatus tf_theta_jet_value(const struct TfThetaJet *jet, double *re, double *im);

/**
 * Component `i` of the z-gradient.
 *
 * # Safety
 * `jet` must be a handle from this library; `re`, `im` writable.
 */
enum TfStatus tf_theta_jet_gradient(const struct TfThetaJet *jet, size_t i, double *re, double *im);

/**
 * Entry `(i, k)` of the z-Hessian.
 *
 * # Safety
 * `jet` must be a handle from this library; `re`, `im` writable.
 */
enum TfStatus tf_theta_jet_hessian(const struct TfThetaJet *jet,
                                   size_t i,
                                   size_t k,
                                   double *re,
                                   double *im);

/**
 * Entry `(i, k)` of the weighted tau-derivative matrix (weight 1/2 off the diagonal).
 *
 * # Safety
 * `jet` must be a handle from this library; `re`, `im` writable.
 */
enum TfStatus tf_theta_jet_tau_deriv(const struct TfThetaJet *jet,
                                     size_t i,
                                     size_t k,
                                     double *re,
                                     double *im);

/**
 * Nonzero when the truncation cap was hit.
 *
 * # Safety
 * `jet` must be NULL or a handle from this library.
 */
bool tf_theta_jet_degraded(const struct TfThetaJet *jet);

/**
 * # Safety
 * `jet` must be NULL or a handle from this library, not freed before.
 */
void tf_theta_jet_free(struct TfThetaJet *jet);

/**
 * Relative residual of Jacobi's derivative formula at a genus-one `tau`.
 *
 * # Safety
 * `tau` must be a handle from this library; `residual` writable.
 */
enum TfStatus tf_classical_jacobi_residual(const struct TfPeriodMatrix *tau, double *residual);

/**
 * Runs the suites described by a JSON config (same fields as the CLI config
 * file) and returns the JSON report, to be released with `tf_string_free`.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `report`, `pass` writable.
 */
enum TfStatus tf_run_suite_json(const char *config_json, char **report, bool *pass);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library, not freed before.
 */
void tf_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THETAFORGE_H */
