#ifndef GGLOPT_H
#define GGLOPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum GgloptStatus {
  GGLOPT_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  GGLOPT_STATUS_NULL_POINTER = 1,
  /**
   * An argument is out of range or inconsistent with the others.
   */
  GGLOPT_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The covariance input failed validation.
   */
  GGLOPT_STATUS_VALIDATION = 3,
  /**
   * The solver stopped at `max_iter`; the returned solution is still valid.
   */
  GGLOPT_STATUS_NOT_CONVERGED = 4,
  /**
   * A matrix left the positive definite cone or another numerical failure.
   */
  GGLOPT_STATUS_NUMERIC = 5,
  /**
   * No grid point converged during model selection.
   */
  GGLOPT_STATUS_SELECTION = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  GGLOPT_STATUS_PANIC = 7,
} GgloptStatus;

typedef enum GgloptFamily {
  GGLOPT_FAMILY_SGL = 0,
  GGLOPT_FAMILY_GGL = 1,
  GGLOPT_FAMILY_FGL = 2,
} GgloptFamily;

/**
 * Validated covariance input.
 */
typedef struct GgloptProblem GgloptProblem;

typedef struct GgloptReport GgloptReport;

typedef struct GgloptSolution GgloptSolution;

typedef struct GgloptSolverConfig {
  double rho_init;
  size_t max_iter;
  double eps_abs;
  double eps_rel;
  bool adaptive_rho;
  bool scale_to_correlation;
} GgloptSolverConfig;

/**
 * Regularization. `mu1` points to `mu1_len` weights (1 or `K`) and is read
 * only when `latent` is set; `lambda2` is ignored for the single family.
 */
typedef struct GgloptPenalty {
  enum GgloptFamily family;
  double lambda1;
  double lambda2;
  bool latent;
  const double *mu1;
  size_t mu1_len;
} GgloptPenalty;

typedef struct GgloptDiagnostics {
  size_t iterations;
  double primal_residual;
  double dual_residual;
  double objective_value;
  bool converged;
  double wall_time_seconds;
} GgloptDiagnostics;

/**
 * One evaluated grid point. Absent parameters and scores are NaN.
 */
typedef struct GgloptGridEntry {
  double lambda1;
  double lambda2;
  double mu1;
  double ebic;
  /**
   * Edges summed over instances.
   */
  size_t edges;
  bool converged;
  size_t iterations;
} GgloptGridEntry;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default solver settings.
 */
struct GgloptSolverConfig gglopt_config_default(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *gglopt_version(void);

/**
 * Message describing the last failure on this thread, or null. The pointer
 * stays valid until the next call into the library on this thread.
 */
const char *gglopt_last_error(void);

/**
 * Copies and validates `k` covariance matrices of dimension `p`.
 *
 * # Safety
 * `data` must point to `k * p * p` doubles and `samples` to `k` counts.
 */
enum GgloptStatus gglopt_problem_new(const double *data,
                                     size_t k,
                                     size_t p,
                                     const size_t *samples,
                                     struct GgloptProblem **out);

/**
 * # Safety
 * `problem` must come from `gglopt_problem_new` and not be used afterwards.
 */
void gglopt_problem_free(struct GgloptProblem *problem);

/**
 * Solves at fixed regularization. On `GGLOPT_STATUS_NOT_CONVERGED` the
 * solution is still stored in `out` and must be freed.
 *
 * # Safety
 * All pointers must be valid; `out` receives a new handle.
 */
enum GgloptStatus gglopt_solve(const struct GgloptProblem *problem,
                               const struct GgloptPenalty *penalty,
                               const struct GgloptSolverConfig *config,
                               struct GgloptSolution **out);

/**
 * # Safety
 * `solution` must come from this library and not be used afterwards.
 */
void gglopt_solution_free(struct GgloptSolution *solution);

/**
 * Number of instances and dimension of a solution.
 *
 * # Safety
 * Pointers must be valid.
 */
enum GgloptStatus gglopt_solution_shape(const struct GgloptSolution *solution,
                                        size_t *k,
                                        size_t *p);

/**
 * Copies the sparse component of instance `instance` (row-major, `len = p*p`).
 *
 * # Safety
 * `out` must have room for `len` doubles.
 */
enum GgloptStatus gglopt_solution_theta(const struct GgloptSolution *solution,
                                        size_t instance,
                                        double *out,
                                        size_t len);

/**
 * Copies the low-rank component of instance `instance`; zero without
 * latent variables.
 *
 * # Safety
 * `out` must have room for `len` doubles.
 */
enum GgloptStatus gglopt_solution_lowrank(const struct GgloptSolution *solution,
                                          size_t instance,
                                          double *out,
                                          size_t len);

/**
 * # Safety
 * Pointers must be valid.
 */
enum GgloptStatus gglopt_solution_diagnostics(const struct GgloptSolution *solution,
                                              struct GgloptDiagnostics *out);

/**
 * Objective value of `solution` for `problem` under `penalty`.
 *
 * # Safety
 * Pointers must be valid.
 */
enum GgloptStatus gglopt_objective(const struct GgloptProblem *problem,
                                   const struct GgloptPenalty *penalty,
                                   const struct GgloptSolution *solution,
                                   double *out);

/**
 * Largest violation of the optimality conditions (solver-independent accuracy).
 *
 * # Safety
 * Pointers must be valid.
 */
enum GgloptStatus gglopt_kkt_residual(const struct GgloptProblem *problem,
                                      const struct GgloptPenalty *penalty,
                                      const struct GgloptSolution *solution,
                                      double *out);

/**
 * Extended BIC of the solution. With a low-rank part the likelihood uses
 * `Theta - L` and the parameters of `L` are counted alongside the edges.
 *
 * # Safety
 * Pointers must be valid.
 */
enum GgloptStatus gglopt_ebic(const struct GgloptProblem *problem,
                              const struct GgloptSolution *solution,
                              double gamma,
                              double *out);

/**
 * Grid search with the extended BIC. `lambda1` must be strictly
 * descending; pass `lambda2_len = 0` for the single family and `mu1_len = 0`
 * without latent variables.
 *
 * # Safety
 * Array pointers must hold the stated number of values; `out` receives a
 * new handle.
 */
enum GgloptStatus gglopt_select(const struct GgloptProblem *problem,
                                enum GgloptFamily family,
                                const double *lambda1,
                                size_t lambda1_len,
                                const double *lambda2,
                                size_t lambda2_len,
                                const double *mu1,
                                size_t mu1_len,
                                double gamma,
                                const struct GgloptSolverConfig *config,
                                struct GgloptReport **out);

/**
 * # Safety
 * `report` must come from `gglopt_select` and not be used afterwards.
 */
void gglopt_report_free(struct GgloptReport *report);

/**
 * Number of evaluated grid points and index of the selected one.
 *
 * # Safety
 * Pointers must be valid.
 */
enum GgloptStatus gglopt_report_summary(const struct GgloptReport *report,
                                        size_t *entries,
                                        size_t *best);

/**
 * # Safety
 * Pointers must be valid.
 */
enum GgloptStatus gglopt_report_entry(const struct GgloptReport *report,
                                      size_t index,
                                      struct GgloptGridEntry *out);

/**
 * Copy of the selected solution as an independent handle.
 *
 * # Safety
 * Pointers must be valid; `out` receives a new handle.
 */
enum GgloptStatus gglopt_report_solution(const struct GgloptReport *report,
                                         struct GgloptSolution **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GGLOPT_H */
