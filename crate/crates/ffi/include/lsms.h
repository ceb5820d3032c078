#ifndef LSMS_H
#define LSMS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stdint.h>

typedef enum LsmsStatus {
  LSMS_STATUS_OK = 0,
  LSMS_STATUS_NULL_POINTER = 1,
  LSMS_STATUS_PARSE_ERROR = 2,
  LSMS_STATUS_INVALID_INPUT = 3,
  LSMS_STATUS_INFEASIBLE = 4,
  LSMS_STATUS_SOLVER_FAILURE = 5,
  LSMS_STATUS_INTERNAL = 6,
} LsmsStatus;

/**
 * Opaque problem instance.
 */
typedef struct LsmsInstance LsmsInstance;

/**
 * Opaque heuristic result: the returned plan plus its cycle trace.
 */
typedef struct LsmsSolution LsmsSolution;

/**
 * Message for the most recent failed call on this thread, or null. Valid
 * until the next lsms call on the same thread.
 */
const char *lsms_last_error(void);

/**
 * Parse and validate an instance from a NUL-terminated JSON string.
 *
 * # Safety
 * `json` must be null or a valid C string; `out` must be null or writable.
 */
enum LsmsStatus lsms_instance_from_json(const char *json, struct LsmsInstance **out);

/**
 * Generate a plant instance. `horizon` is 10, 20 or 30; levels are
 * 0 = low, 1 = medium, 2 = high.
 *
 * # Safety
 * `out` must be null or writable.
 */
enum LsmsStatus lsms_instance_generate(uint32_t horizon,
                                       uint32_t capacity_level,
                                       uint32_t inventory_level,
                                       uint64_t seed,
                                       struct LsmsInstance **out);

/**
 * # Safety
 * `inst` must be null or a handle from this library not yet freed.
 */
void lsms_instance_free(struct LsmsInstance *inst);

/**
 * Serialize an instance to JSON.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be null or writable.
 */
enum LsmsStatus lsms_instance_to_json(const struct LsmsInstance *inst, char **out);

/**
 * Run the two-phase heuristic. `strict_flow` enforces flow equality in
 * every period.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be null or writable.
 */
enum LsmsStatus lsms_solve(const struct LsmsInstance *inst,
                           double eps,
                           uint32_t max_iter,
                           bool strict_flow,
                           struct LsmsSolution **out);

/**
 * # Safety
 * `sol` must be null or a handle from this library not yet freed.
 */
void lsms_solution_free(struct LsmsSolution *sol);

/**
 * # Safety
 * `sol` must be a live handle; `out` must be null or writable.
 */
enum LsmsStatus lsms_solution_objective(const struct LsmsSolution *sol, double *out);

/**
 * Number of heuristic cycles performed.
 *
 * # Safety
 * `sol` must be a live handle; `out` must be null or writable.
 */
enum LsmsStatus lsms_solution_cycles(const struct LsmsSolution *sol, uint32_t *out);

/**
 * Processing time of zero-based machine `m` in zero-based period `t`.
 *
 * # Safety
 * `sol` must be a live handle; `out` must be null or writable.
 */
enum LsmsStatus lsms_solution_proc_time(const struct LsmsSolution *sol,
                                        uint32_t m,
                                        uint32_t t,
                                        double *out);

/**
 * Serialize the solution and its trace as `{"solution": ..., "trace": ...}`.
 *
 * # Safety
 * `sol` must be a live handle; `out` must be null or writable.
 */
enum LsmsStatus lsms_solution_to_json(const struct LsmsSolution *sol, char **out);

/**
 * Count constraint violations of `sol` against `inst` at tolerance `tol`,
 * using the flow mode the solution was computed with.
 *
 * # Safety
 * Both handles must be live; `violations` must be null or writable.
 */
enum LsmsStatus lsms_check_feasibility(const struct LsmsInstance *inst,
                                       const struct LsmsSolution *sol,
                                       double tol,
                                       uint32_t *violations);

/**
 * # Safety
 * `s` must be null or a string returned by this library not yet freed.
 */
void lsms_string_free(char *s);

#endif  /* LSMS_H */
