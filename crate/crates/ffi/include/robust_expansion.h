#ifndef ROBUST_EXPANSION_H
#define ROBUST_EXPANSION_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by fallible calls.
 */
typedef enum ReStatus {
  RE_STATUS_OK = 0,
  RE_STATUS_NULL_ARGUMENT = 1,
  RE_STATUS_INVALID_UTF8 = 2,
  /**
   * Unreadable, malformed or invalid input data or arguments.
   */
  RE_STATUS_INPUT_ERROR = 3,
  /**
   * The LP/MILP backend failed.
   */
  RE_STATUS_SOLVER_ERROR = 4,
  RE_STATUS_ENUMERATION_CAP = 5,
  RE_STATUS_INTERNAL = 6,
  RE_STATUS_PANIC = 7,
} ReStatus;

/**
 * Opaque network instance.
 */
typedef struct ReInstance ReInstance;

/**
 * Opaque result of one robust planning run.
 */
typedef struct RePlan RePlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *re_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *re_version(void);

/**
 * Loads and validates an instance (JSON or CSV bundle manifest).
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum ReStatus re_instance_load(const char *path, struct ReInstance **out);

/**
 * Parses and validates an instance from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum ReStatus re_instance_from_json(const char *json, struct ReInstance **out);

/**
 * # Safety
 * `inst` must be NULL or a handle from this library not yet freed.
 */
void re_instance_free(struct ReInstance *inst);

/**
 * Number of validation violations (0 for a loaded instance).
 *
 * # Safety
 * `inst` must be a live handle.
 */
size_t re_instance_violation_count(const struct ReInstance *inst);

/**
 * # Safety
 * `inst` must be a live handle.
 */
size_t re_instance_region_count(const struct ReInstance *inst);

/**
 * # Safety
 * `inst` must be a live handle.
 */
size_t re_instance_step_count(const struct ReInstance *inst);

/**
 * Runs column-and-constraint generation. `tolerance <= 0` and
 * `max_iterations == 0` select the defaults (1e-8 and 50). A run that stops
 * without converging still returns `Ok` and a plan; check
 * [`re_plan_converged`].
 *
 * # Safety
 * `inst` must be a live handle and `out` a writable pointer.
 */
enum ReStatus re_plan_run(const struct ReInstance *inst,
                          size_t gamma_pv,
                          size_t gamma_wind,
                          double tolerance,
                          size_t max_iterations,
                          struct RePlan **out);

/**
 * # Safety
 * `plan` must be NULL or a handle from this library not yet freed.
 */
void re_plan_free(struct RePlan *plan);

/**
 * Total annualized cost of the plan; NaN for a null handle.
 *
 * # Safety
 * `plan` must be a live handle.
 */
double re_plan_objective(const struct RePlan *plan);

/**
 * Final lower bound, upper bound and relative gap. Any output pointer may
 * be NULL.
 *
 * # Safety
 * `plan` must be a live handle; non-null outputs must be writable.
 */
enum ReStatus re_plan_bounds(const struct RePlan *plan, double *lower, double *upper, double *gap);

/**
 * # Safety
 * `plan` must be a live handle.
 */
size_t re_plan_iterations(const struct RePlan *plan);

/**
 * # Safety
 * `plan` must be a live handle.
 */
bool re_plan_converged(const struct RePlan *plan);

/**
 * The solution document as JSON. Free with [`re_string_free`]; NULL on
 * failure.
 *
 * # Safety
 * `plan` must be a live handle.
 */
char *re_plan_solution_json(const struct RePlan *plan);

/**
 * # Safety
 * `s` must be NULL or a string returned by this library not yet freed.
 */
void re_string_free(char *s);

/**
 * Annualized cost per MW: `overnight * CRF(rate, lifetime) + fixed_om`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ReStatus re_annualize_cost(double overnight,
                                double lifetime,
                                double rate,
                                double fixed_om,
                                double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROBUST_EXPANSION_H */
