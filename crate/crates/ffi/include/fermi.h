#ifndef FERMI_H
#define FERMI_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FermiStatus {
  FERMI_STATUS_OK = 0,
  FERMI_STATUS_INVALID_ARGUMENT = 1,
  FERMI_STATUS_UNSUPPORTED_DIMENSION = 2,
  FERMI_STATUS_DEGENERATE_SEED = 3,
  FERMI_STATUS_RANK_DEFICIENT = 4,
  FERMI_STATUS_UNDER_DETERMINED = 5,
  FERMI_STATUS_NOT_AN_INVARIANT = 6,
  FERMI_STATUS_UNSUPPORTED_CONFIGURATION = 7,
  FERMI_STATUS_PARSE_ERROR = 8,
  FERMI_STATUS_EVAL_ERROR = 9,
  FERMI_STATUS_DATA_ERROR = 10,
  FERMI_STATUS_IO_ERROR = 11,
  FERMI_STATUS_NULL_POINTER = 12,
  /**
   * A Rust panic was caught at the boundary; the handle arguments of the
   * call should be considered unusable.
   */
  FERMI_STATUS_PANIC = 13,
} FermiStatus;

/**
 * Particle ensemble evolved one collision per step.
 */
typedef struct FermiEnsemble FermiEnsemble;

/**
 * Parsed function on a sphere.
 */
typedef struct FermiFunction FermiFunction;

/**
 * Defect statistics over sampled admissible quadruples.
 */
typedef struct FermiDefectStats {
  size_t sample_count;
  double mean_abs_defect;
  double max_abs_defect;
  double rms_defect;
  /**
   * RMS of the function over the sampled points.
   */
  double function_rms;
  double normalized_mean_defect;
  double normalized_max_defect;
} FermiDefectStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failed call on this thread, or an
 * empty string after a successful one. The pointer stays valid until the
 * next `fermi_*` call on the same thread.
 */
const char *fermi_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *fermi_version(void);

/**
 * Outgoing velocities of the quantized collision of `omega`, `omega_star`
 * (both of length `dim`, on the sphere of radius `radius`) along the unit
 * direction `n`, which must be orthogonal to `omega + omega_star`.
 * `out1` and `out2` receive `dim` values each.
 *
 * # Safety
 * Every pointer must be valid for `dim` doubles; outputs must not alias inputs.
 */
enum FermiStatus fermi_collide(size_t dim,
                               double radius,
                               const double *omega,
                               const double *omega_star,
                               const double *n,
                               double *out1,
                               double *out2);

/**
 * Admissible quadruple on the unit sphere from the scalar seed
 * `(s, t, u, v)` with `s + t = u + v`, built around coordinate `axis`
 * (zero-based). `out` receives the four points consecutively,
 * `4 * dim` values: `omega, omega_star, omega', omega_star'`.
 *
 * # Safety
 * `out` must be valid for `4 * dim` doubles.
 */
enum FermiStatus fermi_construct_quadruple(double s,
                                           double t,
                                           double u,
                                           double v,
                                           size_t axis,
                                           size_t dim,
                                           double *out);

/**
 * Parses `spec` (an expression in `w1..wd`, or `fourier:cos:K`,
 * `fourier:sin:K`, `sh:L:M`) as a function on the sphere of radius
 * `radius` in dimension `dim`. On success `*out` owns a new handle.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum FermiStatus fermi_function_parse(const char *spec,
                                      size_t dim,
                                      double radius,
                                      struct FermiFunction **out);

/**
 * Evaluates `f` at `point` (length = the function's dimension). The point
 * is used as given; it is not projected onto the sphere.
 *
 * # Safety
 * `f` must come from `fermi_function_parse`; `point` must hold the
 * function's dimension of doubles.
 */
enum FermiStatus fermi_function_eval(const struct FermiFunction *f,
                                     const double *point,
                                     double *out);

/**
 * # Safety
 * `f` must be null or a handle from `fermi_function_parse` not yet freed.
 */
void fermi_function_free(struct FermiFunction *f);

/**
 * Monte Carlo invariance defect of `f` over `count` sampled admissible
 * quadruples, using the default sampler for the function's dimension.
 *
 * # Safety
 * `f` must be a live handle; `out` must be writable.
 */
enum FermiStatus fermi_mc_defect(const struct FermiFunction *f,
                                 size_t count,
                                 uint64_t seed,
                                 struct FermiDefectStats *out);

/**
 * Numerical dimension of the space of collision invariants spanned by the
 * default basis of degree `degree` in dimension `dim`, from `samples`
 * quadruples at relative tolerance `tol`. `predicted` (may be null)
 * receives the dimension the characterization predicts.
 *
 * # Safety
 * `kernel_dim` must be writable; `predicted` must be null or writable.
 */
enum FermiStatus fermi_kernel_dimension(size_t dim,
                                        uint32_t degree,
                                        size_t samples,
                                        uint64_t seed,
                                        double tol,
                                        size_t *kernel_dim,
                                        size_t *predicted);

/**
 * New ensemble of `particles` points on the sphere of radius `radius`.
 * `init` is `uniform`, `cap:AXIS,ANGLE` or `antipodal-paired-cap:AXIS,ANGLE`
 * (the textual form uses a one-based axis, as on the command line).
 *
 * # Safety
 * `init` must be a NUL-terminated string; `out` must be writable.
 */
enum FermiStatus fermi_ensemble_new(size_t dim,
                                    double radius,
                                    size_t particles,
                                    const char *init,
                                    uint64_t seed,
                                    struct FermiEnsemble **out);

/**
 * Applies `steps` collisions.
 *
 * # Safety
 * `e` must be a live handle not used concurrently.
 */
enum FermiStatus fermi_ensemble_step(struct FermiEnsemble *e, uint64_t steps);

/**
 * Ensemble mean and standard deviation of `f`; `std_dev` may be null.
 *
 * # Safety
 * Handles must be live; `mean` must be writable.
 */
enum FermiStatus fermi_ensemble_moment(const struct FermiEnsemble *e,
                                       const struct FermiFunction *f,
                                       double *mean,
                                       double *std_dev);

/**
 * Number of particles, or 0 for a null handle.
 *
 * # Safety
 * `e` must be null or a live handle.
 */
size_t fermi_ensemble_len(const struct FermiEnsemble *e);

/**
 * Collisions applied so far, or 0 for a null handle.
 *
 * # Safety
 * `e` must be null or a live handle.
 */
uint64_t fermi_ensemble_steps(const struct FermiEnsemble *e);

/**
 * Copies the particle coordinates, row-major, into `out`, which holds
 * `capacity` doubles and must fit `len * dim` of them.
 *
 * # Safety
 * `e` must be a live handle; `out` must be valid for `capacity` doubles.
 */
enum FermiStatus fermi_ensemble_particles(const struct FermiEnsemble *e,
                                          double *out,
                                          size_t capacity);

/**
 * # Safety
 * `e` must be null or a handle from `fermi_ensemble_new` not yet freed.
 */
void fermi_ensemble_free(struct FermiEnsemble *e);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FERMI_H */
