#ifndef VQS_H
#define VQS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum VqsStatus {
  VQS_STATUS_OK = 0,
  VQS_STATUS_NULL_POINTER = 1,
  VQS_STATUS_INVALID_UTF8 = 2,
  VQS_STATUS_CONFIG = 3,
  VQS_STATUS_DOMAIN = 4,
  VQS_STATUS_DEGENERATE_STATE = 5,
  VQS_STATUS_DIVERGED = 6,
  VQS_STATUS_NO_CONVERGENCE = 7,
  VQS_STATUS_IO = 8,
  VQS_STATUS_BUFFER_TOO_SMALL = 9,
  VQS_STATUS_PANIC = 10,
  VQS_STATUS_OTHER = 11,
} VqsStatus;

/**
 * Experiment configuration handle.
 */
typedef struct VqsConfig VqsConfig;

/**
 * Result of a training run.
 */
typedef struct VqsReport VqsReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the calling thread's last error message into `buf` as a
 * NUL-terminated string, truncating if needed. Returns the full message
 * length in bytes, excluding the terminator. `buf` may be null to query
 * the length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t vqs_last_error_message(char *buf, size_t len);

/**
 * Loads a bundled preset (`unperturbed`, `perturbed_a`, `perturbed_b`).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum VqsStatus vqs_config_preset(const char *name, struct VqsConfig **out);

/**
 * Parses configuration text.
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum VqsStatus vqs_config_parse(const char *text, struct VqsConfig **out);

/**
 * Reads a configuration file, falling back to a preset of the same name.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum VqsStatus vqs_config_load(const char *path, struct VqsConfig **out);

/**
 * Overrides the iteration cap.
 *
 * # Safety
 * `cfg` must be null or a live handle.
 */
enum VqsStatus vqs_config_set_max_iters(struct VqsConfig *cfg, size_t max_iters);

/**
 * Overrides the initialization seed.
 *
 * # Safety
 * `cfg` must be null or a live handle.
 */
enum VqsStatus vqs_config_set_seed(struct VqsConfig *cfg, uint64_t seed);

/**
 * Overrides the basis size N and quadrature size G.
 *
 * # Safety
 * `cfg` must be null or a live handle.
 */
enum VqsStatus vqs_config_set_sizes(struct VqsConfig *cfg, size_t basis_size, size_t grid_size);

/**
 * Releases a configuration. Null is ignored.
 *
 * # Safety
 * `cfg` must be null or a handle not yet freed.
 */
void vqs_config_free(struct VqsConfig *cfg);

/**
 * Box eigenvalue `E_n` for width `a`, mass `mu`, and `hbar`.
 *
 * # Safety
 * `out` must be writable.
 */
enum VqsStatus vqs_box_energy(size_t n, double a, double mu, double hbar, double *out);

/**
 * Ground energies from the truncated-basis eigensolver and the
 * finite-difference grid solver.
 *
 * # Safety
 * `cfg` must be a live handle; the outputs must be writable.
 */
enum VqsStatus vqs_oracle_energies(const struct VqsConfig *cfg,
                                   double *basis_energy,
                                   double *grid_energy);

/**
 * Trains a network for `cfg`. Blocks until training stops.
 *
 * # Safety
 * `cfg` must be a live handle; `out` must be writable.
 */
enum VqsStatus vqs_train(const struct VqsConfig *cfg, struct VqsReport **out);

/**
 * Scalar summary of a report. Any output pointer may be null.
 *
 * # Safety
 * `report` must be a live handle; non-null outputs must be writable.
 */
enum VqsStatus vqs_report_summary(const struct VqsReport *report,
                                  double *final_energy,
                                  double *oracle_energy,
                                  double *oracle_overlap,
                                  size_t *iterations,
                                  bool *converged);

/**
 * Copies the sign-fixed unit coefficient vector into `buf`. The required
 * length is written to `needed` when it is non-null; pass a null `buf` with
 * `len = 0` to query it.
 *
 * # Safety
 * `report` must be a live handle; `buf` must be null or hold `len` values.
 */
enum VqsStatus vqs_report_coefficients(const struct VqsReport *report,
                                       double *buf,
                                       size_t len,
                                       size_t *needed);

/**
 * Copies the per-iteration energy trace into `buf`, same protocol as
 * [`vqs_report_coefficients`].
 *
 * # Safety
 * `report` must be a live handle; `buf` must be null or hold `len` values.
 */
enum VqsStatus vqs_report_energy_trace(const struct VqsReport *report,
                                       double *buf,
                                       size_t len,
                                       size_t *needed);

/**
 * Releases a report. Null is ignored.
 *
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void vqs_report_free(struct VqsReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VQS_H */
