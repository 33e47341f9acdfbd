#ifndef BSFLOW_H
#define BSFLOW_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BsflowScheme {
  BSFLOW_SCHEME_GD = 0,
  BSFLOW_SCHEME_BGN = 1,
} BsflowScheme;

/**
 * Result codes.
 */
typedef enum BsflowStatus {
  BSFLOW_STATUS_OK = 0,
  BSFLOW_STATUS_NULL_POINTER = 1,
  BSFLOW_STATUS_INVALID_ARGUMENT = 2,
  BSFLOW_STATUS_CONFIG = 3,
  BSFLOW_STATUS_GEOMETRIC = 4,
  BSFLOW_STATUS_SOLVER = 5,
  BSFLOW_STATUS_IO = 6,
  BSFLOW_STATUS_BUFFER_TOO_SMALL = 7,
  BSFLOW_STATUS_PANIC = 8,
} BsflowStatus;

/**
 * Opaque simulation handle.
 */
typedef struct BsflowSim BsflowSim;

/**
 * Per-step scalar diagnostics.
 */
typedef struct BsflowDiagnostics {
  uint64_t step;
  double t;
  double kinetic;
  double surface_kinetic;
  double interface_energy;
  double total_psi;
  double total_rho_gamma;
  double area;
  double min_psi;
  double min_rho_gamma;
  double edge_ratio;
  double dissipation;
  double energy_old;
  double energy_new;
} BsflowDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *bsflow_version(void);

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t bsflow_last_error(char *buf, size_t cap);

/**
 * Create a simulation from a named preset.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BsflowStatus bsflow_sim_from_preset(const char *name,
                                         enum BsflowScheme scheme,
                                         struct BsflowSim **out);

/**
 * Create a simulation from a JSON configuration.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum BsflowStatus bsflow_sim_from_json(const char *json, struct BsflowSim **out);

/**
 * Release a handle. Null is ignored.
 *
 * # Safety
 * `sim` must come from this library and not be used afterwards.
 */
void bsflow_sim_free(struct BsflowSim *sim);

/**
 * Advance `n` time steps.
 *
 * # Safety
 * `sim` must be a live handle.
 */
enum BsflowStatus bsflow_sim_step(struct BsflowSim *sim, uint64_t n);

/**
 * Current time and step count.
 *
 * # Safety
 * `sim` must be a live handle; `t` and `step` may be null.
 */
enum BsflowStatus bsflow_sim_time(const struct BsflowSim *sim, double *t, uint64_t *step);

/**
 * Diagnostics of the latest step (or of the initial state).
 *
 * # Safety
 * `sim` must be a live handle and `out` valid.
 */
enum BsflowStatus bsflow_sim_diagnostics(const struct BsflowSim *sim,
                                         struct BsflowDiagnostics *out);

/**
 * Interface vertices as interleaved x, y pairs (2K values).
 * Pass a null buffer with `cap` 0 to query the length.
 *
 * # Safety
 * `sim` must be a live handle; `buf` must hold `cap` doubles.
 */
enum BsflowStatus bsflow_sim_vertices(const struct BsflowSim *sim,
                                      double *buf,
                                      size_t cap,
                                      size_t *len);

/**
 * Vertex values of the surface material density.
 *
 * # Safety
 * As for `bsflow_sim_vertices`.
 */
enum BsflowStatus bsflow_sim_rho_gamma(const struct BsflowSim *sim,
                                       double *buf,
                                       size_t cap,
                                       size_t *len);

/**
 * Vertex values of the surfactant concentration.
 *
 * # Safety
 * As for `bsflow_sim_vertices`.
 */
enum BsflowStatus bsflow_sim_psi(const struct BsflowSim *sim, double *buf, size_t cap, size_t *len);

/**
 * Run summary as JSON, NUL-terminated. `len` receives the length without the NUL.
 *
 * # Safety
 * `sim` must be a live handle; `buf` must be null or hold `cap` bytes.
 */
enum BsflowStatus bsflow_sim_summary_json(const struct BsflowSim *sim,
                                          char *buf,
                                          size_t cap,
                                          size_t *len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BSFLOW_H */
