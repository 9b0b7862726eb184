#ifndef ANNULUS_EXTREMAL_H
#define ANNULUS_EXTREMAL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum AxStatus {
  AX_STATUS_OK = 0,
  /**
   * Invalid or unparsable input.
   */
  AX_STATUS_INVALID_ARGUMENT = 2,
  /**
   * `r` exceeds the admissibility bound.
   */
  AX_STATUS_INFEASIBLE = 3,
  /**
   * Quadrature, root finding or grid failure.
   */
  AX_STATUS_NUMERICAL = 4,
  AX_STATUS_NULL_POINTER = 5,
  /**
   * Output buffer too small; the required length was written.
   */
  AX_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  AX_STATUS_PANIC = 7,
} AxStatus;

/**
 * Opaque radial metric.
 */
typedef struct AxMetric AxMetric;

/**
 * Opaque solved instance.
 */
typedef struct AxSolution AxSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * `ρ ≡ 1`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum AxStatus ax_metric_constant(struct AxMetric **out);

/**
 * `ρ(s) = s^(−λ)`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum AxStatus ax_metric_power(double lambda, struct AxMetric **out);

/**
 * Tabulated metric from `n` samples `(s[i], rho[i])`.
 *
 * # Safety
 * `s` and `rho` must point to `n` readable doubles; `out` must be valid for writes.
 */
enum AxStatus ax_metric_tabulated(const double *s,
                                  const double *rho,
                                  uintptr_t n,
                                  struct AxMetric **out);

/**
 * Parses `const`, `power:<λ>` or `table:<path>`.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum AxStatus ax_metric_parse(const char *text, struct AxMetric **out);

/**
 * Releases a metric; null is ignored.
 *
 * # Safety
 * `m` must come from an `ax_metric_*` constructor and not be freed twice.
 */
void ax_metric_free(struct AxMetric *m);

/**
 * `α₀ = −min b²s²ρ²` on `[1, R]` and the minimizer.
 *
 * # Safety
 * `m` must be a live metric; outputs must be valid for writes.
 */
enum AxStatus ax_alpha0(const struct AxMetric *m,
                        double a,
                        double b,
                        double big_r,
                        double *out_alpha0,
                        double *out_s_star);

/**
 * Admissibility bound `r_max`; `+∞` when the integral diverges.
 *
 * # Safety
 * `m` must be a live metric; `out` must be valid for writes.
 */
enum AxStatus ax_nitsche_bound(const struct AxMetric *m,
                               double a,
                               double b,
                               double big_r,
                               double *out);

/**
 * Solves the instance with `samples` profile points.
 *
 * # Safety
 * `m` must be a live metric; `out` must be valid for writes.
 */
enum AxStatus ax_solve(const struct AxMetric *m,
                       double a,
                       double b,
                       double r,
                       double big_r,
                       uintptr_t samples,
                       struct AxSolution **out);

/**
 * Releases a solution; null is ignored.
 *
 * # Safety
 * `s` must come from [`ax_solve`] and not be freed twice.
 */
void ax_solution_free(struct AxSolution *s);

/**
 * First-integral constant `α`, or NaN for a null handle.
 *
 * # Safety
 * `s` must be null or a live solution.
 */
double ax_solution_alpha(const struct AxSolution *s);

/**
 * # Safety
 * `s` must be null or a live solution.
 */
double ax_solution_alpha0(const struct AxSolution *s);

/**
 * # Safety
 * `s` must be null or a live solution.
 */
double ax_solution_energy(const struct AxSolution *s);

/**
 * # Safety
 * `s` must be null or a live solution.
 */
double ax_solution_distortion(const struct AxSolution *s);

/**
 * # Safety
 * `s` must be null or a live solution.
 */
double ax_solution_r_max(const struct AxSolution *s);

/**
 * 1 when `r` sits on the bound, 0 otherwise or for a null handle.
 *
 * # Safety
 * `s` must be null or a live solution.
 */
int32_t ax_solution_critical(const struct AxSolution *s);

/**
 * Number of profile samples, 0 for a null handle.
 *
 * # Safety
 * `s` must be null or a live solution.
 */
uintptr_t ax_solution_len(const struct AxSolution *s);

/**
 * Copies the samples `t`, `H`, `Hdot` into buffers of capacity `cap`.
 * `out_len` receives the sample count, also when the buffers are too small.
 *
 * # Safety
 * `s` must be a live solution; each buffer must hold `cap` doubles; `out_len` must be valid for writes.
 */
enum AxStatus ax_solution_copy_profile(const struct AxSolution *s,
                                       double *t,
                                       double *h,
                                       double *hdot,
                                       uintptr_t cap,
                                       uintptr_t *out_len);

/**
 * Runs the verification battery; `out_passed` is 1 when every check passes.
 * `out_el_residual` and `out_duality_gap` may be null.
 *
 * # Safety
 * `s` must be a live solution; non-null outputs must be valid for writes.
 */
enum AxStatus ax_solution_verify(const struct AxSolution *s,
                                 int32_t *out_passed,
                                 double *out_el_residual,
                                 double *out_duality_gap);

/**
 * Message of the last failed call on this thread, empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *ax_last_error_message(void);

/**
 * Library version, static storage.
 */
const char *ax_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANNULUS_EXTREMAL_H */
