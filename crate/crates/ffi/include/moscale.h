#ifndef MOSCALE_H
#define MOSCALE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Status codes returned by every entry point.
 */
typedef enum MoscaleStatus {
  MOSCALE_STATUS_OK = 0,
  MOSCALE_STATUS_NULL_POINTER = 1,
  MOSCALE_STATUS_INVALID_PARAMETER = 2,
  MOSCALE_STATUS_NO_ROOT = 3,
  MOSCALE_STATUS_NO_CONVERGENCE = 4,
  MOSCALE_STATUS_DEGENERATE = 5,
  MOSCALE_STATUS_UNSUPPORTED = 6,
  MOSCALE_STATUS_INFEASIBLE = 7,
  MOSCALE_STATUS_NUMERIC_ERROR = 8,
} MoscaleStatus;

/*
 Opaque power-law problem handle.
 */
typedef struct MoscaleProblem MoscaleProblem;

/*
 Deterministic-equivalent result mirrored into a C layout.
 */
typedef struct MoscaleDetEquiv {
  double t1;
  double t2;
  double t3;
  double t4;
  double t5;
  double q;
  double kappa;
  double value;
} MoscaleDetEquiv;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 A static description of a status code.
 */
const char *moscale_status_message(enum MoscaleStatus status);

/*
 Create a problem. `out` receives an owned handle on success.

 # Safety
 `out` must be a valid pointer.
 */
enum MoscaleStatus moscale_problem_new(double gamma,
                                       double delta,
                                       double rho,
                                       size_t p_trunc,
                                       struct MoscaleProblem **out);

/*
 Release a handle created by [`moscale_problem_new`]. A null pointer is a
 no-op.

 # Safety
 `problem` must be a handle from `moscale_problem_new`, not yet freed.
 */
void moscale_problem_free(struct MoscaleProblem *problem);

/*
 Scaling exponents of the problem family.

 # Safety
 All pointers must be valid.
 */
enum MoscaleStatus moscale_problem_exponents(const struct MoscaleProblem *problem,
                                             double *nu,
                                             double *nu_prime);

/*
 The objective gap `L*` and the integral bound on its truncated tail.

 # Safety
 All pointers must be valid.
 */
enum MoscaleStatus moscale_lstar(const struct MoscaleProblem *problem,
                                 double *value,
                                 double *tail_bound);

/*
 Truncated resolvent sum `sum i^{-a_exp} / (i^{-1-gamma} + kappa)^{b_pow}`.

 # Safety
 All pointers must be valid.
 */
enum MoscaleStatus moscale_resolvent_sum(const struct MoscaleProblem *problem,
                                         double a_exp,
                                         uint8_t b_pow,
                                         double kappa,
                                         double *out);

/*
 Solve the effective-regularizer fixed point. `n = 0` means infinite data.

 # Safety
 All pointers must be valid.
 */
enum MoscaleStatus moscale_solve_kappa(const struct MoscaleProblem *problem,
                                       double lambda,
                                       uint64_t n,
                                       double *kappa,
                                       double *residual,
                                       uint32_t *iterations);

/*
 Closed-form order of the fixed point, `max(lambda, n^{-1-gamma})`.

 # Safety
 `out` must be a valid pointer.
 */
enum MoscaleStatus moscale_kappa_asymptotic(double lambda, uint64_t n, double gamma, double *out);

/*
 Expected performance equivalent at `(n, alpha, lambda)`; `n = 0` means
 infinite data.

 # Safety
 All pointers must be valid.
 */
enum MoscaleStatus moscale_l1_det_expected(const struct MoscaleProblem *problem,
                                           uint64_t n,
                                           double alpha,
                                           double lambda,
                                           struct MoscaleDetEquiv *out);

/*
 Expected safety equivalent at `(n, alpha, lambda)`.

 # Safety
 All pointers must be valid.
 */
enum MoscaleStatus moscale_l2_det_expected(const struct MoscaleProblem *problem,
                                           uint64_t n,
                                           double alpha,
                                           double lambda,
                                           struct MoscaleDetEquiv *out);

/*
 Minimize the expected loss (`objective = 0`) or the excess loss over the
 infinite-data ridgeless floor (`objective = 1`) over the regularizer.
 `grid_fallback` reports whether the dense-scan fallback produced the
 result.

 # Safety
 All pointers must be valid.
 */
enum MoscaleStatus moscale_optimize_lambda(const struct MoscaleProblem *problem,
                                           uint64_t n,
                                           double alpha,
                                           uint32_t objective,
                                           double *lambda_star,
                                           double *value,
                                           uint8_t *grid_fallback);

/*
 Warm-up entry threshold form `G_I^{-1/nu}`; writes C `INFINITY` and sets
 `is_infinite` once `tau_i >= L*`.

 # Safety
 All pointers must be valid.
 */
enum MoscaleStatus moscale_threshold_warmup(const struct MoscaleProblem *problem,
                                            double tau_i,
                                            double *value,
                                            uint8_t *is_infinite);

/*
 Searched market-entry threshold. Dataset sizes use the `0 = infinite`
 sentinel; safety caps use C `INFINITY` for "unconstrained". When
 `safety_model_det` is nonzero the deterministic-equivalent safety
 constraint is used. A threshold that does not exist sets `is_infinite`
 and leaves `n_e_star` at 0.

 # Safety
 All pointers must be valid.
 */
enum MoscaleStatus moscale_entry_threshold_search(const struct MoscaleProblem *problem,
                                                  uint64_t n_i,
                                                  double tau_i,
                                                  double tau_e,
                                                  uint8_t safety_model_det,
                                                  uint64_t *n_e_star,
                                                  uint8_t *is_infinite);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* MOSCALE_H */
