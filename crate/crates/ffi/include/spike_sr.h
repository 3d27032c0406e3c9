#ifndef SPIKE_SR_H
#define SPIKE_SR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  SR_METHOD_EDP = 0,
  SR_METHOD_DMP = 1,
} SrMethod;

typedef enum {
  SR_NOISE_NONE = 0,
  SR_NOISE_CAUCHY_CLIPPED = 1,
  SR_NOISE_UNIFORM_BOX = 2,
} SrNoise;

/**
 * Status codes returned by every fallible entry point.
 */
typedef enum {
  SR_STATUS_OK = 0,
  SR_STATUS_NULL_POINTER = 1,
  SR_STATUS_INVALID_ARGUMENT = 2,
  SR_STATUS_INVALID_SPIKE = 3,
  SR_STATUS_OUT_OF_BAND = 4,
  SR_STATUS_SHIFT_INFEASIBLE = 5,
  SR_STATUS_DEGENERATE = 6,
  SR_STATUS_SOLVER_FAILURE = 7,
  SR_STATUS_AMBIGUOUS_ALIAS = 8,
  SR_STATUS_AMPLITUDE_UNDERFLOW = 9,
  SR_STATUS_BUFFER_TOO_SMALL = 10,
  SR_STATUS_OTHER = 11,
  SR_STATUS_PANIC = 12,
} SrStatus;

/**
 * Opaque measurement oracle.
 */
typedef struct SrOracle SrOracle;

/**
 * Opaque recovery result.
 */
typedef struct SrRecovery SrRecovery;

/**
 * Opaque spike train.
 */
typedef struct SrSpike SrSpike;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *sr_last_error_message(void);

/**
 * Build a spike train from `n` nodes and amplitudes split into real and
 * imaginary parts.
 *
 * # Safety
 * Input arrays must hold `n` values; `out` must be writable.
 */
SrStatus sr_spike_new(const double *nodes,
                      const double *amps_re,
                      const double *amps_im,
                      uintptr_t n,
                      SrSpike **out);

/**
 * # Safety
 * `spike` must be a live handle or null.
 */
uintptr_t sr_spike_len(const SrSpike *spike);

/**
 * # Safety
 * `spike` must come from [`sr_spike_new`] and not be used afterwards.
 */
void sr_spike_free(SrSpike *spike);

/**
 * Measurement oracle over `[-omega_max, omega_max]`; copies the spike.
 *
 * # Safety
 * `spike` must be a live handle; `out` must be writable.
 */
SrStatus sr_oracle_new(const SrSpike *spike,
                       double omega_max,
                       double epsilon,
                       SrNoise noise,
                       uint64_t seed,
                       SrOracle **out);

/**
 * Noisy sample at frequency `omega`.
 *
 * # Safety
 * `oracle` must be a live handle; outputs must be writable.
 */
SrStatus sr_oracle_eval(const SrOracle *oracle, double omega, double *re, double *im);

/**
 * # Safety
 * `oracle` must come from [`sr_oracle_new`] and not be used afterwards.
 */
void sr_oracle_free(SrOracle *oracle);

/**
 * Decimated recovery of `n` nodes in `m` clusters.
 *
 * # Safety
 * `oracle` must be a live handle; `out` must be writable.
 */
SrStatus sr_decimated_sr(const SrOracle *oracle,
                         uintptr_t n,
                         uintptr_t m,
                         SrMethod method,
                         SrRecovery **out);

/**
 * # Safety
 * `rec` must be a live handle or null.
 */
uintptr_t sr_recovery_len(const SrRecovery *rec);

/**
 * Selected decimation rate (1 when selection was bypassed).
 *
 * # Safety
 * `rec` must be a live handle or null.
 */
uint64_t sr_recovery_rho(const SrRecovery *rec);

/**
 * Co-prime shift used (0 when selection was bypassed).
 *
 * # Safety
 * `rec` must be a live handle or null.
 */
uint64_t sr_recovery_shift(const SrRecovery *rec);

/**
 * Copy the sorted node estimates into `nodes[0..cap]`.
 *
 * # Safety
 * `rec` must be a live handle; `nodes` must hold `cap` values.
 */
SrStatus sr_recovery_nodes(const SrRecovery *rec, double *nodes, uintptr_t cap);

/**
 * Copy the amplitude estimates, in node order.
 *
 * # Safety
 * `rec` must be a live handle; `re` and `im` must hold `cap` values.
 */
SrStatus sr_recovery_amps(const SrRecovery *rec, double *re, double *im, uintptr_t cap);

/**
 * # Safety
 * `rec` must come from [`sr_decimated_sr`] and not be used afterwards.
 */
void sr_recovery_free(SrRecovery *rec);

/**
 * Distance on the circle between two angles.
 */
double sr_wrap_dist(double x, double y);

/**
 * Smallest admissible shift co-prime to `rho`.
 *
 * # Safety
 * `out` must be writable.
 */
SrStatus sr_coprime_shift(uint64_t rho, double omega, uintptr_t n, uint64_t *out);

/**
 * Descending singular values of the `n x n` sample Toeplitz matrix at
 * rate `rho`, written to `out[0..n]`.
 *
 * # Safety
 * `oracle` must be a live handle; `out` must hold `cap` values.
 */
SrStatus sr_toeplitz_singular_values(const SrOracle *oracle,
                                     uint64_t rho,
                                     uintptr_t n,
                                     double *out,
                                     uintptr_t cap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPIKE_SR_H */
