#ifndef INERTIAL_HPE_H
#define INERTIAL_HPE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HpeOracle {
  HPE_ORACLE_IPP = 0,
  HPE_ORACLE_FB = 1,
  HPE_ORACLE_FBF = 2,
} HpeOracle;

typedef enum HpeVariant {
  HPE_VARIANT_STANDARD = 0,
  HPE_VARIANT_RELAXED = 1,
} HpeVariant;

/**
 * Status codes; 0 to 4 match the `hpe` command's exit codes.
 */
typedef enum HpeStatus {
  HPE_STATUS_OK = 0,
  HPE_STATUS_MAX_ITERATIONS = 2,
  HPE_STATUS_STEP_VIOLATION = 3,
  HPE_STATUS_INVALID_CONFIG = 4,
  HPE_STATUS_NULL_POINTER = 5,
  HPE_STATUS_IO = 6,
  HPE_STATUS_BUFFER_TOO_SMALL = 7,
  HPE_STATUS_OUT_OF_RANGE = 8,
  HPE_STATUS_PANIC = 9,
} HpeStatus;

/**
 * Opaque problem handle.
 */
typedef struct HpeProblem HpeProblem;

/**
 * Opaque result handle.
 */
typedef struct HpeResult HpeResult;

/**
 * Solve options. Fields set to NaN (reals), 0 (`max_iters`) or -1
 * (`enforce_step_inequality`) fall back to the oracle defaults.
 */
typedef struct HpeSolveOptions {
  enum HpeOracle oracle;
  enum HpeVariant variant;
  double alpha;
  double sigma;
  double c;
  double tol;
  uint64_t max_iters;
  int32_t enforce_step_inequality;
} HpeSolveOptions;

/**
 * One trace row. `has_phi` is 0 when no reference solution was known, in
 * which case `phi` and `mu` are NaN.
 */
typedef struct HpeTraceRecord {
  uint64_t k;
  double step_sq;
  double gap_sq;
  double v_sq;
  double eps;
  double r_norm;
  double slack;
  double phi;
  double mu;
  int32_t has_phi;
} HpeTraceRecord;

typedef struct HpeFbfParams {
  double sigma_bar;
  double sigma;
  /**
   * Infinite when `beta = 0`.
   */
  double c_max;
  double window_lower;
  double window_upper;
} HpeFbfParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer is
 * valid until the next call into this library on the same thread.
 */
const char *hpe_last_error(void);

struct HpeSolveOptions hpe_solve_options_default(enum HpeOracle oracle);

/**
 * Builds a problem from a generator spec such as `saddle,n=4,seed=11`.
 *
 * # Safety
 * `spec` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum HpeStatus hpe_problem_generate(const char *spec, struct HpeProblem **out);

/**
 * Loads a TOML problem file.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum HpeStatus hpe_problem_load(const char *path, struct HpeProblem **out);

/**
 * Parses a problem from TOML text.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum HpeStatus hpe_problem_from_toml(const char *text, struct HpeProblem **out);

/**
 * # Safety
 * `problem` must be null or a handle from this library.
 */
size_t hpe_problem_dimension(const struct HpeProblem *problem);

/**
 * Writes the problem as TOML.
 *
 * # Safety
 * `problem` must be a handle from this library and `path` a valid string.
 */
enum HpeStatus hpe_problem_save(const struct HpeProblem *problem, const char *path);

/**
 * # Safety
 * `problem` must be null or a handle from this library, not yet freed.
 */
void hpe_problem_free(struct HpeProblem *problem);

/**
 * Runs the solver. `*out` is set to null first and receives a result handle
 * when the run stops normally (`Ok`, or `MaxIterations` at the limit). A
 * diverging run reports `MaxIterations` with no handle.
 *
 * # Safety
 * `problem` must be a handle from this library; `opts` may be null for IPP
 * defaults; `out` must be a valid pointer.
 */
enum HpeStatus hpe_solve(const struct HpeProblem *problem,
                         const struct HpeSolveOptions *opts,
                         struct HpeResult **out);

/**
 * # Safety
 * `result` must be null or a handle from this library.
 */
size_t hpe_result_iterations(const struct HpeResult *result);

/**
 * 1 when the run stopped on the residual tolerance.
 *
 * # Safety
 * `result` must be null or a handle from this library.
 */
int32_t hpe_result_converged(const struct HpeResult *result);

/**
 * # Safety
 * `result` must be null or a handle from this library.
 */
size_t hpe_result_dimension(const struct HpeResult *result);

/**
 * Copies the final iterate into `buf`, which must hold `len >= dimension` doubles.
 *
 * # Safety
 * `result` must be a handle from this library and `buf` valid for `len` writes.
 */
enum HpeStatus hpe_result_copy_x(const struct HpeResult *result, double *buf, size_t len);

/**
 * Inclusion residual at the final iterate.
 *
 * # Safety
 * `result` must be null or a handle from this library.
 */
double hpe_result_final_residual(const struct HpeResult *result);

/**
 * Distance to the problem's known solution, NaN when none is stored.
 *
 * # Safety
 * `result` must be null or a handle from this library.
 */
double hpe_result_distance_to_known(const struct HpeResult *result);

/**
 * Number of decrease-bound violations of the Lyapunov sequence, -1 when unchecked.
 *
 * # Safety
 * `result` must be null or a handle from this library.
 */
int64_t hpe_result_mu_violations(const struct HpeResult *result);

/**
 * # Safety
 * `result` must be null or a handle from this library.
 */
size_t hpe_result_trace_len(const struct HpeResult *result);

/**
 * # Safety
 * `result` must be a handle from this library and `out` a valid pointer.
 */
enum HpeStatus hpe_result_trace_record(const struct HpeResult *result,
                                       size_t index,
                                       struct HpeTraceRecord *out);

/**
 * Writes the trace in the same CSV layout as `hpe solve --trace`.
 *
 * # Safety
 * `result` must be a handle from this library and `path` a valid string.
 */
enum HpeStatus hpe_result_write_csv(const struct HpeResult *result, const char *path);

/**
 * # Safety
 * `result` must be null or a handle from this library, not yet freed.
 */
void hpe_result_free(struct HpeResult *result);

/**
 * Evaluates the parameter condition for `variant`; `Ok` iff it is below 1.
 *
 * # Safety
 * `value` must be null or valid for one write.
 */
enum HpeStatus hpe_check_parameters(double alpha,
                                    double sigma,
                                    enum HpeVariant variant,
                                    double *value);

/**
 * Forward-backward-forward tolerances for inertia `alpha` and Lipschitz
 * modulus `beta`. A NaN `sigma_bar` selects the window midpoint.
 *
 * # Safety
 * `out` must be valid for one write.
 */
enum HpeStatus hpe_derive_fbf_params(double alpha,
                                     double beta,
                                     double sigma_bar,
                                     struct HpeFbfParams *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INERTIAL_HPE_H */
