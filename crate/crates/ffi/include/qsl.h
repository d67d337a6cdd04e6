#ifndef QSL_H
#define QSL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; nonzero values match the CLI exit codes where they overlap.
 */
typedef enum QslStatus {
  QSL_STATUS_OK = 0,
  QSL_STATUS_IO = 1,
  QSL_STATUS_CONFIG = 2,
  QSL_STATUS_INVARIANT = 3,
  QSL_STATUS_NON_CONVERGENCE = 4,
  QSL_STATUS_NULL_POINTER = 5,
  QSL_STATUS_BUFFER_TOO_SMALL = 6,
  QSL_STATUS_PANIC = 7,
} QslStatus;

/**
 * Opaque simulation handle.
 */
typedef struct QslSimulation QslSimulation;

/**
 * One diagnostics snapshot. `r_measured` is NaN when no radius is defined.
 */
typedef struct QslDiagnostics {
  double t;
  double e;
  double e_vol;
  double kinetic;
  double gl_energy;
  double diss_parallel_cum;
  double diss_transport_cum;
  double max_q;
  double r_measured;
  uint64_t clamp_count;
} QslDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty if none. The
 * pointer stays valid until the next failing call on the same thread.
 */
const char *qsl_last_error_message(void);

/**
 * Create a simulation for one ε from a JSON configuration (NULL for the
 * defaults). On success `*out` owns the new handle.
 *
 * # Safety
 * `config_json` must be NULL or a valid NUL-terminated string and `out` a
 * valid pointer.
 */
enum QslStatus qsl_sim_new(const char *config_json, double eps, struct QslSimulation **out);

/**
 * Advance up to `n` steps, stopping at the final time. `taken` (optional)
 * receives the number of steps performed.
 *
 * # Safety
 * `sim` must come from `qsl_sim_new`; `taken` must be NULL or valid.
 */
enum QslStatus qsl_sim_step(struct QslSimulation *sim, size_t n, size_t *taken);

/**
 * Current time, or NaN for a NULL handle.
 *
 * # Safety
 * `sim` must be NULL or come from `qsl_sim_new`.
 */
double qsl_sim_time(const struct QslSimulation *sim);

/**
 * Steps taken so far and total steps to the final time.
 *
 * # Safety
 * `sim` must come from `qsl_sim_new`; the out pointers must be NULL or valid.
 */
enum QslStatus qsl_sim_progress(const struct QslSimulation *sim, size_t *step, size_t *total);

/**
 * Evaluate the diagnostics on the current state.
 *
 * # Safety
 * `sim` must come from `qsl_sim_new` and `out` must be valid.
 */
enum QslStatus qsl_sim_diagnostics(struct QslSimulation *sim, struct QslDiagnostics *out);

/**
 * Grid size of the simulation.
 *
 * # Safety
 * `sim` must come from `qsl_sim_new`; `nx` and `ny` must be valid.
 */
enum QslStatus qsl_sim_grid(const struct QslSimulation *sim, size_t *nx, size_t *ny);

/**
 * Copy the Q field as `(q11, q12, q13, q22, q23)` per cell, row-major with
 * x fastest. `len` is the capacity of `buf` in doubles and must be at least
 * `5·nx·ny`.
 *
 * # Safety
 * `sim` must come from `qsl_sim_new` and `buf` must hold `len` doubles.
 */
enum QslStatus qsl_sim_q_field(const struct QslSimulation *sim, double *buf, size_t len);

/**
 * Release a handle; NULL is ignored.
 *
 * # Safety
 * `sim` must be NULL or come from `qsl_sim_new`, and not be used afterwards.
 */
void qsl_sim_free(struct QslSimulation *sim);

/**
 * Surface tension of the bulk potential with parameters `(a, b, c)`.
 *
 * # Safety
 * `out` must be valid.
 */
enum QslStatus qsl_surface_tension(double a, double b, double c, double *out);

/**
 * Quasi-distance `g(s)` on the uniaxial branch.
 *
 * # Safety
 * `out` must be valid.
 */
enum QslStatus qsl_quasi_distance(double s, double a, double b, double c, double *out);

/**
 * Bulk energy of `q = (q11, q12, q13, q22, q23)`.
 *
 * # Safety
 * `q` must point to 5 doubles and `out` must be valid.
 */
enum QslStatus qsl_bulk_energy(const double *q, double a, double b, double c, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QSL_H */
