#ifndef KIRCHHOFF_FIBER_H
#define KIRCHHOFF_FIBER_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Status code of every fallible call.
 */
typedef enum KfStatus {
  KF_STATUS_OK = 0,
  KF_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The requested extremal parameter is non-positive for this direction
   * (below the threshold hyperbola); the signed value is still written.
   */
  KF_STATUS_SUBCRITICAL = 2,
  KF_STATUS_NEHARI_EMPTY = 3,
  KF_STATUS_NOT_CONVERGED = 4,
  KF_STATUS_INTERNAL_ERROR = 5,
} KfStatus;

/**
 * Fiber-map shape classification.
 */
typedef enum KfFiberClass {
  KF_FIBER_CLASS_INCREASING = 0,
  KF_FIBER_CLASS_INFLECTION_CRITICAL = 1,
  KF_FIBER_CLASS_TWO_CRITICAL = 2,
  KF_FIBER_CLASS_SINGLE_MAX = 3,
} KfFiberClass;

/**
 * Opaque radial mesh handle.
 */
typedef struct KfMesh KfMesh;

/**
 * Opaque result of a branch minimization.
 */
typedef struct KfNehariResult KfNehariResult;

/**
 * Opaque problem definition `(N, a, b, lambda, p)`.
 */
typedef struct KfProblem KfProblem;

/**
 * Dimensional constants; see `kf_constants`.
 */
typedef struct KfConstants {
  uint32_t n;
  double two_star;
  double sobolev;
  double omega_n;
  double c1;
  double c2;
} KfConstants;

/**
 * Classification result; absent locations and energies are NaN.
 */
typedef struct KfFiberReport {
  enum KfFiberClass shape;
  double t_minus;
  double t_plus;
  double t_degenerate;
  double energy_minus;
  double energy_plus;
  /**
   * Relative margin to the degenerate band.
   */
  double margin;
} KfFiberReport;

/**
 * Closed-form `lambda = 0` thresholds of a direction.
 */
typedef struct KfThresholds {
  double zero_energy_t;
  double zero_energy_b;
  double degenerate_t;
  double degenerate_b;
} KfThresholds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Static description of a status code.
 */
const char *kf_status_message(enum KfStatus status);

/**
 * Fills `out` with the constants for dimension `n >= 5`.
 *
 * # Safety
 * `out` must point to writable memory for one `KfConstants`.
 */
enum KfStatus kf_constants(uint32_t n, struct KfConstants *out);

/**
 * Creates a problem handle; fails on invalid parameters.
 *
 * # Safety
 * `out` must be a valid pointer. The handle must be released with
 * `kf_problem_free`.
 */
enum KfStatus kf_problem_new(uint32_t n,
                             double a,
                             double b,
                             double lambda,
                             double p,
                             struct KfProblem **out);

/**
 * # Safety
 * `problem` must come from `kf_problem_new` and not be freed twice.
 */
void kf_problem_free(struct KfProblem *problem);

/**
 * Classifies the fiber map of the direction with norms
 * `A = ||u||^2`, `C = ||u||_{2*}^{2*}`, `P = ||u||_p^p`.
 *
 * # Safety
 * `problem` must be a live handle, `out` a valid pointer.
 */
enum KfStatus kf_fiber_classify(const struct KfProblem *problem,
                                double grad_sq,
                                double crit_int,
                                double pert_int,
                                struct KfFiberReport *out);

/**
 * Unique `lambda0(u)`: the fiber has a zero-energy global minimum there.
 * Returns `KF_STATUS_SUBCRITICAL` (value still written) when it is
 * non-positive.
 *
 * # Safety
 * All pointers must be valid; `problem` must be live.
 */
enum KfStatus kf_lambda0_of_direction(const struct KfProblem *problem,
                                      double grad_sq,
                                      double crit_int,
                                      double pert_int,
                                      double *lambda_out,
                                      double *t_out);

/**
 * Unique `lambda(u)`: the fiber has a degenerate critical point there.
 *
 * # Safety
 * All pointers must be valid; `problem` must be live.
 */
enum KfStatus kf_lambda_of_direction(const struct KfProblem *problem,
                                     double grad_sq,
                                     double crit_int,
                                     double pert_int,
                                     double *lambda_out,
                                     double *t_out);

/**
 * # Safety
 * `out` must be a valid pointer.
 */
enum KfStatus kf_closed_form_thresholds(uint32_t n,
                                        double a,
                                        double grad_sq,
                                        double crit_int,
                                        struct KfThresholds *out);

/**
 * Creates a radial mesh on the unit ball. `grading`: 0 uniform, 1 refined
 * (clustering at origin and boundary). `intervals >= 64`.
 *
 * # Safety
 * `out` must be a valid pointer; release the handle with `kf_mesh_free`.
 */
enum KfStatus kf_mesh_new(uint32_t n, size_t intervals, uint32_t grading, struct KfMesh **out);

/**
 * # Safety
 * `mesh` must come from `kf_mesh_new` and not be freed twice.
 */
void kf_mesh_free(struct KfMesh *mesh);

/**
 * Number of nodes (`intervals + 1`).
 *
 * # Safety
 * `mesh` must be a live handle.
 */
size_t kf_mesh_len(const struct KfMesh *mesh);

/**
 * Copies up to `len` node radii into `buf`; returns the full node count.
 *
 * # Safety
 * `buf` must point to at least `len` writable doubles.
 */
size_t kf_mesh_nodes(const struct KfMesh *mesh, double *buf, size_t len);

/**
 * Mesh-level Sobolev constant `S_h` by Rayleigh-quotient descent.
 * `KF_STATUS_NOT_CONVERGED` marks a resolution-limited stall; the best
 * value is still written.
 *
 * # Safety
 * `mesh` must be live; `s_h_out` valid.
 */
enum KfStatus kf_sobolev_constant(const struct KfMesh *mesh, double *s_h_out);

/**
 * Minimizes the energy over the `N^-` branch with `n_starts` standard start
 * directions. On success the handle owns the minimizer.
 *
 * # Safety
 * `problem` and `mesh` must be live handles; release the result with
 * `kf_nehari_free`.
 */
enum KfStatus kf_nehari_minimize(const struct KfProblem *problem,
                                 const struct KfMesh *mesh,
                                 uint32_t n_starts,
                                 uint64_t seed,
                                 struct KfNehariResult **out);

/**
 * # Safety
 * `result` must come from `kf_nehari_minimize` and not be freed twice.
 */
void kf_nehari_free(struct KfNehariResult *result);

/**
 * # Safety
 * `result` must be a live handle.
 */
double kf_nehari_level(const struct KfNehariResult *result);

/**
 * # Safety
 * `result` must be a live handle.
 */
double kf_nehari_residual(const struct KfNehariResult *result);

/**
 * # Safety
 * `result` must be a live handle.
 */
bool kf_nehari_converged(const struct KfNehariResult *result);

/**
 * Copies up to `len` nodal values of the minimizer into `buf`; returns the
 * full value count.
 *
 * # Safety
 * `buf` must point to at least `len` writable doubles.
 */
size_t kf_nehari_minimizer(const struct KfNehariResult *result, double *buf, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KIRCHHOFF_FIBER_H */
