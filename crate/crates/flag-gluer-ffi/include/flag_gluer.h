#ifndef FLAG_GLUER_H
#define FLAG_GLUER_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum FgStatus {
  FG_STATUS_OK = 0,
  FG_STATUS_NULL_ARGUMENT = 1,
  FG_STATUS_INVALID_UTF8 = 2,
  FG_STATUS_PARSE = 3,
  FG_STATUS_TRIANGULATION = 4,
  FG_STATUS_PARAMS = 5,
  FG_STATUS_DEGENERATE = 6,
  FG_STATUS_PATH = 7,
  FG_STATUS_COCYCLE = 8,
  FG_STATUS_NUMERICAL = 9,
  FG_STATUS_IO = 10,
  FG_STATUS_BUFFER_TOO_SMALL = 11,
  FG_STATUS_OUT_OF_RANGE = 12,
  FG_STATUS_PANIC = 13,
} FgStatus;

/**
 * Outcome of a solve.
 */
typedef enum FgSolveStatus {
  FG_SOLVE_STATUS_CONVERGED = 0,
  FG_SOLVE_STATUS_STALLED = 1,
  FG_SOLVE_STATUS_DIVERGED = 2,
} FgSolveStatus;

/**
 * Opaque parameter handle. Only valid with the triangulation it was made for.
 */
typedef struct FgParams FgParams;

/**
 * Opaque triangulation handle.
 */
typedef struct FgTriangulation FgTriangulation;

typedef struct FgSolveInfo {
  enum FgSolveStatus status;
  double residual_norm;
  size_t iterations;
  size_t jacobian_rank;
} FgSolveInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *fg_last_error(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void fg_string_free(char *s);

/**
 * Parses a triangulation file's JSON text.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` a valid pointer.
 */
enum FgStatus fg_triangulation_from_json(const char *json, struct FgTriangulation **out);

/**
 * # Safety
 * `tri` must come from [`fg_triangulation_from_json`] and not have been freed.
 */
void fg_triangulation_free(struct FgTriangulation *tri);

/**
 * Number of tetrahedra, or 0 for a null handle.
 *
 * # Safety
 * `tri` must be null or a live handle.
 */
size_t fg_triangulation_num_tets(const struct FgTriangulation *tri);

/**
 * Number of edge classes, or 0 for a null handle.
 *
 * # Safety
 * `tri` must be null or a live handle.
 */
size_t fg_triangulation_num_edges(const struct FgTriangulation *tri);

/**
 * Number of residuals of the unpinned system, or 0 for a null handle.
 *
 * # Safety
 * `tri` must be null or a live handle.
 */
size_t fg_num_residuals(const struct FgTriangulation *tri);

/**
 * Parses a parameter file's JSON text against `tri`.
 *
 * # Safety
 * `tri` must be a live handle, `json` a nul-terminated string and `out` a
 * valid pointer.
 */
enum FgStatus fg_params_from_json(const struct FgTriangulation *tri,
                                  const char *json,
                                  struct FgParams **out);

/**
 * Every edge ratio and gluing parameter equal to one.
 *
 * # Safety
 * `tri` must be a live handle and `out` a valid pointer.
 */
enum FgStatus fg_params_all_ones(const struct FgTriangulation *tri, struct FgParams **out);

/**
 * # Safety
 * `params` must come from this library and not have been freed.
 */
void fg_params_free(struct FgParams *params);

/**
 * Writes the parameters as a parameter file. Free the result with
 * [`fg_string_free`].
 *
 * # Safety
 * Both handles must be live and `out` a valid pointer.
 */
enum FgStatus fg_params_to_json(const struct FgTriangulation *tri,
                                const struct FgParams *params,
                                char **out);

/**
 * Evaluates every residual into `buf`, which must hold at least
 * [`fg_num_residuals`] values. `written` receives the count.
 *
 * # Safety
 * Both handles must be live, `buf` must point to `len` doubles and
 * `written` must be a valid pointer.
 */
enum FgStatus fg_residuals(const struct FgTriangulation *tri,
                           const struct FgParams *params,
                           double *buf,
                           size_t len,
                           size_t *written);

/**
 * Row-major product around edge class `edge`, scaled so its (2,2) entry is 1.
 *
 * # Safety
 * Both handles must be live and `out` must point to 16 doubles.
 */
enum FgStatus fg_edge_matrix(const struct FgTriangulation *tri,
                             const struct FgParams *params,
                             size_t edge,
                             double *out);

/**
 * Solves from `init` with `num_pins` pins of the form `tet0:e12=2`.
 * `max_iter` 0 and `tol` ≤ 0 select the defaults. A solve that does not
 * converge still returns [`FgStatus::Ok`] with its status in `info`.
 *
 * # Safety
 * Handles must be live, `pins` must point to `num_pins` nul-terminated
 * strings (or be null when `num_pins` is 0), and `out` and `info` must be
 * valid pointers.
 */
enum FgStatus fg_solve(const struct FgTriangulation *tri,
                       const struct FgParams *init,
                       const char *const *pins,
                       size_t num_pins,
                       double tol,
                       size_t max_iter,
                       struct FgParams **out,
                       struct FgSolveInfo *info);

/**
 * Classification of every tetrahedron as JSON. Free the result with
 * [`fg_string_free`].
 *
 * # Safety
 * Both handles must be live and `out` a valid pointer.
 */
enum FgStatus fg_classify_json(const struct FgTriangulation *tri,
                               const struct FgParams *params,
                               double tol,
                               char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLAG_GLUER_H */
