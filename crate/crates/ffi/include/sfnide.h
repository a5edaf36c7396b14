#ifndef SFNIDE_H
#define SFNIDE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible entry point.
typedef enum SfnideStatus {
  SFNIDE_STATUS_OK = 0,
  // Argument outside the mathematical domain of the operation.
  SFNIDE_STATUS_DOMAIN_ERROR = 1,
  // Computation would overflow double precision.
  SFNIDE_STATUS_OVERFLOW = 2,
  // Iteration budget exhausted without convergence.
  SFNIDE_STATUS_NOT_CONVERGED = 3,
  // A function evaluation produced a non-finite value.
  SFNIDE_STATUS_EVALUATION = 4,
  // Inconsistent shapes, grids, or rules.
  SFNIDE_STATUS_MISMATCH = 5,
  // Invalid configuration values.
  SFNIDE_STATUS_CONFIG = 6,
  // Operating-system I/O failure.
  SFNIDE_STATUS_IO = 7,
  // A required pointer argument was null.
  SFNIDE_STATUS_NULL_POINTER = 8,
  // Unexpected internal failure.
  SFNIDE_STATUS_INTERNAL = 9,
} SfnideStatus;

// Opaque Gauss-Jacobi rule handle.
typedef struct SfnideJacobiRule SfnideJacobiRule;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message (NUL-terminated) into `buf`. Returns the
// full message length including the terminator; if it exceeds `cap` the
// message is truncated. A zero return means no error has been recorded
// on this thread.
//
// # Safety
// `buf` must point to at least `cap` writable bytes, or be null with
// `cap` 0 to query the required length.
uintptr_t sfnide_last_error(char *buf, uintptr_t cap);

// Gamma function for positive arguments.
//
// # Safety
// `out` must point to a writable double.
enum SfnideStatus sfnide_gamma(double x, double *out);

// Natural log of the Gamma function for positive arguments.
//
// # Safety
// `out` must point to a writable double.
enum SfnideStatus sfnide_log_gamma(double x, double *out);

// Beta function B(x, y) for positive arguments.
//
// # Safety
// `out` must point to a writable double.
enum SfnideStatus sfnide_beta(double x, double y, double *out);

// One-parameter Mittag-Leffler function E_alpha(x) for alpha in (0,1]
// and x in [0, 50].
//
// # Safety
// `out` must point to a writable double.
enum SfnideStatus sfnide_mittag_leffler(double alpha, double x, double *out);

// Build an n-point Gauss-Jacobi rule on (0,1) for the weight
// (1-u)^exponent_a * u^exponent_b; both exponents must exceed -1.
//
// # Safety
// `out` must point to a writable handle slot. The returned handle must
// be released with [`sfnide_jacobi_rule_free`].
enum SfnideStatus sfnide_jacobi_rule_new(double exponent_a,
                                         double exponent_b,
                                         uintptr_t n,
                                         struct SfnideJacobiRule **out);

// Number of nodes in the rule; 0 for a null handle.
//
// # Safety
// `rule` must be null or a live handle from [`sfnide_jacobi_rule_new`].
uintptr_t sfnide_jacobi_rule_len(const struct SfnideJacobiRule *rule);

// Copy nodes and weights (each `sfnide_jacobi_rule_len` doubles) into the
// caller's arrays. Either destination may be null to skip it.
//
// # Safety
// Non-null destinations must have room for the full rule length.
enum SfnideStatus sfnide_jacobi_rule_copy(const struct SfnideJacobiRule *rule,
                                          double *nodes_out,
                                          double *weights_out);

// Release a rule handle. Null is a no-op.
//
// # Safety
// `rule` must be null or a live handle; it is invalid after this call.
void sfnide_jacobi_rule_free(struct SfnideJacobiRule *rule);

// Evaluate the multi-kernel integral-inequality bound at time `t` for
// constant data: inhomogeneity `g`, singular-kernel coefficient `b` of
// order `alpha`, and `n_kernels` extra kernels with orders `alpha_i` and
// coefficients `a_i`. Writes the bound and the number of series shells
// consumed (`shells_out` may be null).
//
// # Safety
// `alpha_i` and `a_i` must point to `n_kernels` doubles each (null only
// when `n_kernels` is 0); `out` must be writable.
enum SfnideStatus sfnide_gronwall_bound(double alpha,
                                        const double *alpha_i,
                                        const double *a_i,
                                        uintptr_t n_kernels,
                                        double b,
                                        double g,
                                        double horizon,
                                        double t,
                                        uintptr_t k_max,
                                        double tail_tol,
                                        uintptr_t quad_order,
                                        double *out,
                                        uintptr_t *shells_out);

// Run the Euler-Maruyama scheme for the built-in scalar benchmark
// problem on `n_steps` uniform steps over [0,1], driven by the Brownian
// path of stream `stream` under `seed`. Writes the `n_steps + 1` state
// values (including the initial one) into `out`.
//
// # Safety
// `out` must have room for `n_steps + 1` doubles.
enum SfnideStatus sfnide_benchmark_trajectory(double alpha,
                                              double alpha1,
                                              double beta1,
                                              double beta2,
                                              uintptr_t n_steps,
                                              uint64_t seed,
                                              uint64_t stream,
                                              uintptr_t quad_order,
                                              double *out);

// Coupled coarse/fine mean-square error estimate at the final time for
// the built-in benchmark problem: `n_paths` Brownian samples at
// `coarse_steps` steps against their refinements at twice the
// resolution.
//
// # Safety
// `out` must point to a writable double.
enum SfnideStatus sfnide_benchmark_coupled_error(double alpha,
                                                 double alpha1,
                                                 double beta1,
                                                 double beta2,
                                                 uintptr_t coarse_steps,
                                                 uint64_t n_paths,
                                                 uint64_t seed,
                                                 uintptr_t quad_order,
                                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SFNIDE_H */
