#ifndef DMPOPT_H
#define DMPOPT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum DmpStatus {
  DMP_STATUS_OK = 0,
  DMP_STATUS_NULL_POINTER = 1,
  DMP_STATUS_INVALID_ARGUMENT = 2,
  DMP_STATUS_PARSE = 3,
  DMP_STATUS_INFEASIBLE_BUDGET = 4,
  DMP_STATUS_NUMERICAL = 5,
  DMP_STATUS_IO = 6,
  DMP_STATUS_TIMEOUT = 7,
  DMP_STATUS_PANIC = 8,
} DmpStatus;

/**
 * Opaque spreading network.
 */
typedef struct DmpNetwork DmpNetwork;

/**
 * Opaque forward solution.
 */
typedef struct DmpTrajectory DmpTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or NULL if none. Owned by the
 * library; do not free.
 */
const char *dmp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dmp_version(void);

/**
 * Loads an edge list (`src dst alpha` per line) or a `.json` network.
 * `default_alpha` is used for two-column lines; pass a negative value to
 * require the third column.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum DmpStatus dmp_network_load(const char *path,
                                int undirected,
                                double default_alpha,
                                struct DmpNetwork **out);

/**
 * Builds a network with nodes `0..n` (labelled by their index) from `m`
 * directed edges.
 *
 * # Safety
 * `src`, `dst` and `alpha` must point to `m` elements; `out` must be valid.
 */
enum DmpStatus dmp_network_from_edges(size_t n,
                                      const size_t *src,
                                      const size_t *dst,
                                      const double *alpha,
                                      size_t m,
                                      struct DmpNetwork **out);

/**
 * # Safety
 * `net` must be NULL or a handle from this library.
 */
size_t dmp_network_node_count(const struct DmpNetwork *net);

/**
 * Number of directed edges.
 *
 * # Safety
 * `net` must be NULL or a handle from this library.
 */
size_t dmp_network_edge_count(const struct DmpNetwork *net);

/**
 * # Safety
 * `net` must be NULL or a handle from this library not yet freed.
 */
void dmp_network_free(struct DmpNetwork *net);

/**
 * Runs the forward equations for `horizon` steps. `initial` holds `n`
 * triples or is NULL for all susceptible; `nu` and `mu` hold
 * `horizon * n` entries or are NULL for zero.
 *
 * # Safety
 * Pointers must be NULL where allowed or point to arrays of the stated size.
 */
enum DmpStatus dmp_forward(const struct DmpNetwork *net,
                           const double *initial,
                           const double *nu,
                           const double *mu,
                           size_t horizon,
                           struct DmpTrajectory **out);

/**
 * # Safety
 * `traj` must be NULL or a handle from this library.
 */
size_t dmp_trajectory_horizon(const struct DmpTrajectory *traj);

/**
 * Copies the `n` triples `(P_S, P_I, P_R)` at step `t` into `out`, which
 * must hold `len >= 3 n` doubles.
 *
 * # Safety
 * `traj` must be a handle from this library and `out` must hold `len` doubles.
 */
enum DmpStatus dmp_trajectory_marginals(const struct DmpTrajectory *traj,
                                        size_t t,
                                        double *out,
                                        size_t len);

/**
 * # Safety
 * `traj` must be NULL or a handle from this library not yet freed.
 */
void dmp_trajectory_free(struct DmpTrajectory *traj);

/**
 * Optimal seeding: distributes `budget` of spontaneous activation over all
 * nodes at `t = 0` to maximize the expected number infected at `horizon`.
 * Writes the `n` activation probabilities to `out_nu` and the objective to
 * `out_objective`. `max_iters = 0` keeps the default cap.
 *
 * # Safety
 * `net` must be a handle from this library; `initial` NULL or `3 n`
 * doubles; `out_nu` must hold `n` doubles; `out_objective` must be valid.
 */
enum DmpStatus dmp_optimize_seeding(const struct DmpNetwork *net,
                                    const double *initial,
                                    size_t horizon,
                                    double budget,
                                    size_t max_iters,
                                    double *out_nu,
                                    double *out_objective);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DMPOPT_H */
