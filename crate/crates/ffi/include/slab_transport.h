#ifndef SLAB_TRANSPORT_H
#define SLAB_TRANSPORT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call.
 */
typedef enum SlabStatus {
  SLAB_STATUS_OK = 0,
  SLAB_STATUS_NULL_POINTER = 1,
  SLAB_STATUS_INVALID_ARGUMENT = 2,
  /**
   * The iteration did not converge; the simulation stays at its last
   * completed step.
   */
  SLAB_STATUS_NONCONVERGENCE = 3,
  /**
   * Singular or non-finite linear solve.
   */
  SLAB_STATUS_SOLVER_FAILURE = 4,
  SLAB_STATUS_BUFFER_TOO_SMALL = 5,
  /**
   * All configured steps have been taken.
   */
  SLAB_STATUS_FINISHED = 6,
  SLAB_STATUS_PANIC = 7,
} SlabStatus;

/**
 * Opaque simulation handle.
 */
typedef struct SlabSimulation SlabSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a simulation of a built-in problem (`"test-a"` or `"test-b"`).
 *
 * `method` may be null to keep the problem's default (the reference
 * scheme, or whatever `config` sets). `config` is null or `key = value`
 * lines applied on top of the built-in problem. On success `*out` owns a
 * handle that must be released with [`slab_simulation_free`].
 *
 * # Safety
 * String arguments are null or valid NUL-terminated strings; `out` is null
 * or writable.
 */
enum SlabStatus slab_simulation_new(const char *problem,
                                    const char *method,
                                    const char *config,
                                    struct SlabSimulation **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `sim` is null or a handle from [`slab_simulation_new`] not yet freed.
 */
void slab_simulation_free(struct SlabSimulation *sim);

/**
 * Advances one time step. `iterations` may be null; otherwise it receives
 * the number of iteration passes the step took.
 *
 * Returns `SLAB_STATUS_FINISHED` without doing anything once the last step
 * has been taken.
 *
 * # Safety
 * `sim` is null or a live handle; `iterations` is null or writable.
 */
enum SlabStatus slab_simulation_step(struct SlabSimulation *sim, size_t *iterations);

/**
 * Advances through every remaining step.
 *
 * # Safety
 * `sim` is null or a live handle.
 */
enum SlabStatus slab_simulation_run(struct SlabSimulation *sim);

/**
 * # Safety
 * `sim` is null or a live handle; `out` is null or writable.
 */
enum SlabStatus slab_simulation_cell_count(const struct SlabSimulation *sim, size_t *out);

/**
 * Steps taken so far and the configured total (either pointer may be null).
 *
 * # Safety
 * `sim` is null or a live handle; outputs are null or writable.
 */
enum SlabStatus slab_simulation_steps(const struct SlabSimulation *sim,
                                      size_t *taken,
                                      size_t *total);

/**
 * Current simulation time in ns.
 *
 * # Safety
 * `sim` is null or a live handle; `out` is null or writable.
 */
enum SlabStatus slab_simulation_time(const struct SlabSimulation *sim, double *out);

/**
 * Copies the cell-average and first-moment scalar flux of the latest step
 * into `avg` and `slope` (either may be null), each of length `len`.
 *
 * # Safety
 * `sim` is null or a live handle; non-null buffers hold `len` writable
 * doubles.
 */
enum SlabStatus slab_simulation_scalar_flux(const struct SlabSimulation *sim,
                                            double *avg,
                                            double *slope,
                                            size_t len);

/**
 * Bytes the simulation currently carries between steps.
 *
 * # Safety
 * `sim` is null or a live handle; `out` is null or writable.
 */
enum SlabStatus slab_simulation_persisted_bytes(const struct SlabSimulation *sim, size_t *out);

/**
 * Bytes a method persists between steps on a `cells × directions` grid.
 *
 * # Safety
 * `method` is null or a valid NUL-terminated string; `out` is null or
 * writable.
 */
enum SlabStatus slab_persisted_bytes(const char *method,
                                     size_t cells,
                                     size_t directions,
                                     size_t *out);

/**
 * `‖candidate − reference‖₂ / ‖reference‖₂`. When the reference norm is
 * zero, `*out` is the absolute norm of `candidate` and `*absolute` (if not
 * null) is set to true.
 *
 * # Safety
 * `candidate` and `reference` hold `len` readable doubles; `out` is
 * writable; `absolute` is null or writable.
 */
enum SlabStatus slab_relative_l2_error(const double *candidate,
                                       const double *reference,
                                       size_t len,
                                       double *out,
                                       bool *absolute);

/**
 * Message of the last failing call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *slab_last_error(void);

/**
 * Static name of a status code; takes a plain integer so that any value
 * coming from C is safe to pass.
 */
const char *slab_status_name(int32_t status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SLAB_TRANSPORT_H */
