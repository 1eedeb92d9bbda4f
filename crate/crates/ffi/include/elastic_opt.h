/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef ELASTIC_OPT_H
#define ELASTIC_OPT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum EoStatus {
  EO_STATUS_OK = 0,
  EO_STATUS_NULL_POINTER = 1,
  EO_STATUS_INVALID_ARGUMENT = 2,
  EO_STATUS_BUFFER_TOO_SMALL = 3,
  EO_STATUS_CONFIG = 4,
  EO_STATUS_DIMENSION = 5,
  EO_STATUS_NUMERICS = 6,
  EO_STATUS_UNSTABLE = 7,
  EO_STATUS_DIVERGED = 8,
  EO_STATUS_PARSE = 9,
  EO_STATUS_IO = 10,
  EO_STATUS_OTHER = 11,
  EO_STATUS_PANIC = 12,
} EoStatus;

/**
 * Linear round map of one algorithm on the scalar quadratic.
 */
typedef struct EoRoundMap EoRoundMap;

/**
 * Finished simulation.
 */
typedef struct EoSimResult EoSimResult;

/**
 * Spectral radii over an `eta_h x alpha` grid.
 */
typedef struct EoStabilityGrid EoStabilityGrid;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null when there was
 * none. The pointer stays valid until the next failing call on this thread.
 */
const char *eo_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *eo_version(void);

/**
 * Frees a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void eo_string_free(char *s);

/**
 * Largest eigenvalue modulus of the `n x n` matrix `m`.
 *
 * # Safety
 * `m` must point to `n * n` doubles and `out` to one.
 */
enum EoStatus eo_spectral_radius(const double *m, size_t n, double *out);

/**
 * Stationary covariance `S = M S M^T + Q` by fixed-point iteration, written
 * to the `n x n` buffer `out`.
 *
 * # Safety
 * `m`, `q` and `out` must each point to `n * n` doubles.
 */
enum EoStatus eo_lyapunov_stationary(const double *m,
                                     const double *q,
                                     size_t n,
                                     double tol,
                                     size_t max_iter,
                                     double *out);

/**
 * Builds the round map of `algorithm` (`easgd_sync`, `easgd_rr`, `admm_rr`,
 * `sgd` or `msgd`). `delta` is used by msgd and `tau` by easgd_rr.
 *
 * # Safety
 * `algorithm` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EoStatus eo_round_map_new(const char *algorithm,
                               size_t p,
                               double h,
                               double eta,
                               double rho,
                               double delta,
                               uint64_t tau,
                               struct EoRoundMap **out);

/**
 * # Safety
 * `map` must come from [`eo_round_map_new`] and not have been freed. Null is ignored.
 */
void eo_round_map_free(struct EoRoundMap *map);

/**
 * Stacked state dimension of the map, or 0 for a null handle.
 *
 * # Safety
 * `map` must be null or a live handle.
 */
size_t eo_round_map_dim(const struct EoRoundMap *map);

/**
 * Copies the `dim x dim` matrix into `out`, which holds `len` doubles.
 *
 * # Safety
 * `map` must be a live handle and `out` must point to `len` doubles.
 */
enum EoStatus eo_round_map_matrix(const struct EoRoundMap *map, double *out, size_t len);

/**
 * # Safety
 * `map` must be a live handle and `out` must point to one double.
 */
enum EoStatus eo_round_map_spectral_radius(const struct EoRoundMap *map, double *out);

/**
 * Advances `state` (length `len`, equal to the map dimension) by `rounds` rounds in place.
 *
 * # Safety
 * `map` must be a live handle and `state` must point to `len` doubles.
 */
enum EoStatus eo_round_map_apply(const struct EoRoundMap *map,
                                 double *state,
                                 size_t len,
                                 size_t rounds);

/**
 * Stationary per-coordinate variance under gradient noise `sigma`, written
 * to `out` (at least `dim` doubles).
 *
 * # Safety
 * `map` must be a live handle and `out` must point to `len` doubles.
 */
enum EoStatus eo_round_map_stationary_variance(const struct EoRoundMap *map,
                                               double sigma,
                                               double *out,
                                               size_t len);

/**
 * Scans `algorithm` with `p` workers over the given axes (`h = 1`).
 *
 * # Safety
 * `algorithm` must be a NUL-terminated string, the axes must point to
 * `n_eta` and `n_alpha` doubles, and `out` must be valid.
 */
enum EoStatus eo_scan_stability(const char *algorithm,
                                size_t p,
                                const double *eta_h,
                                size_t n_eta,
                                const double *alpha,
                                size_t n_alpha,
                                struct EoStabilityGrid **out);

/**
 * # Safety
 * `grid` must come from [`eo_scan_stability`] and not have been freed. Null is ignored.
 */
void eo_stability_grid_free(struct EoStabilityGrid *grid);

/**
 * Copies all radii, row-major over `eta_h`, into `out`.
 *
 * # Safety
 * `grid` must be a live handle and `out` must point to `len` doubles.
 */
enum EoStatus eo_stability_grid_radii(const struct EoStabilityGrid *grid, double *out, size_t len);

/**
 * Number of cells whose radius is not below `1 - 1e-10`; 0 for a null handle.
 *
 * # Safety
 * `grid` must be null or a live handle.
 */
size_t eo_stability_grid_unstable_count(const struct EoStabilityGrid *grid);

/**
 * The grid as CSV (`eta_h,alpha,radius,stable`); free with [`eo_string_free`].
 *
 * # Safety
 * `grid` must be a live handle and `out` a valid pointer.
 */
enum EoStatus eo_stability_grid_csv(const struct EoStabilityGrid *grid, char **out);

/**
 * Runs the simulator on a key=value config (the same format as the CLI;
 * `mode` and `output_dir` are ignored).
 *
 * # Safety
 * `config` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EoStatus eo_sim_run(const char *config, struct EoSimResult **out);

/**
 * # Safety
 * `result` must come from [`eo_sim_run`] and not have been freed. Null is ignored.
 */
void eo_sim_result_free(struct EoSimResult *result);

/**
 * Parameter dimension; 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t eo_sim_dim(const struct EoSimResult *result);

/**
 * Worker count; 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
size_t eo_sim_num_workers(const struct EoSimResult *result);

/**
 * Final center version; 0 for a null handle.
 *
 * # Safety
 * `result` must be null or a live handle.
 */
uint64_t eo_sim_center_version(const struct EoSimResult *result);

/**
 * Copies the final center into `out`.
 *
 * # Safety
 * `result` must be a live handle and `out` must point to `len` doubles.
 */
enum EoStatus eo_sim_center(const struct EoSimResult *result, double *out, size_t len);

/**
 * Copies the final parameters of worker `index` into `out`.
 *
 * # Safety
 * `result` must be a live handle and `out` must point to `len` doubles.
 */
enum EoStatus eo_sim_worker(const struct EoSimResult *result,
                            size_t index,
                            double *out,
                            size_t len);

/**
 * Metrics CSV of the run; free with [`eo_string_free`].
 *
 * # Safety
 * `result` must be a live handle and `out` a valid pointer.
 */
enum EoStatus eo_sim_metrics_csv(const struct EoSimResult *result, char **out);

/**
 * Event log (`time,worker,kind,center_version` lines); free with [`eo_string_free`].
 *
 * # Safety
 * `result` must be a live handle and `out` a valid pointer.
 */
enum EoStatus eo_sim_events(const struct EoSimResult *result, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ELASTIC_OPT_H */
