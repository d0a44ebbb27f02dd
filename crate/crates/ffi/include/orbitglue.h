#ifndef ORBITGLUE_H
#define ORBITGLUE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  OG_STATUS_OK = 0,
  OG_STATUS_NULL_POINTER = 1,
  OG_STATUS_INVALID_ARGUMENT = 2,
  OG_STATUS_NUMERICAL = 3,
  OG_STATUS_OUTSIDE_RANGE = 4,
  OG_STATUS_PANIC = 5,
} OgStatus;

/**
 * Suspension flow over a subshift with a locally constant roof.
 */
typedef struct OgSuspension OgSuspension;

/**
 * Subshift of finite type.
 */
typedef struct OgSystem OgSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Version string of the library, NUL terminated and statically allocated.
 */
const char *og_version(void);

/**
 * Copies the last error message of this thread into `buffer`, truncating to
 * `capacity - 1` bytes and NUL terminating. Returns the untruncated length.
 *
 * # Safety
 * `buffer` must be null or valid for `capacity` bytes.
 */
uintptr_t og_last_error_message(char *buffer, uintptr_t capacity);

/**
 * Builds a system from a row-major `size x size` matrix of 0/1 entries.
 *
 * # Safety
 * `matrix` must point to `size * size` bytes and `out` must be writable.
 */
OgStatus og_system_new(const uint8_t *matrix, uintptr_t size, OgSystem **out);

/**
 * # Safety
 * `sys` must be null or a handle from [`og_system_new`] not yet freed.
 */
void og_system_free(OgSystem *sys);

/**
 * Alphabet size, or 0 for a null handle.
 *
 * # Safety
 * `sys` must be null or a live handle.
 */
uintptr_t og_system_size(const OgSystem *sys);

/**
 * Topological pressure of a potential table.
 *
 * # Safety
 * `values` must hold `size^depth` doubles; `out` must be writable.
 */
OgStatus og_pressure(const OgSystem *sys, const double *values, uintptr_t depth, double *out);

/**
 * Gluing bound `N(epsilon)` of the discrete system.
 *
 * # Safety
 * `sys` must be a live handle; `out` must be writable.
 */
OgStatus og_discrete_gluing_bound(const OgSystem *sys, double epsilon, uintptr_t *out);

/**
 * Suspension of a copy of `sys` under a positive roof table.
 *
 * # Safety
 * `roof` must hold `size^depth` doubles; `out` must be writable.
 */
OgStatus og_suspension_new(const OgSystem *sys,
                           const double *roof,
                           uintptr_t depth,
                           OgSuspension **out);

/**
 * # Safety
 * `susp` must be null or a handle from [`og_suspension_new`] not yet freed.
 */
void og_suspension_free(OgSuspension *susp);

/**
 * Internal scale `xi` and flow gluing bound `T(epsilon)`.
 *
 * # Safety
 * `susp` must be a live handle; `xi` and `bound` must be writable.
 */
OgStatus og_flow_gluing_scale(const OgSuspension *susp, double epsilon, double *xi, double *bound);

/**
 * Free energy `c(q)` for fiberwise-constant `phi` and `psi`.
 *
 * # Safety
 * Tables must hold `size^depth` doubles; `out` must be writable.
 */
OgStatus og_free_energy(const OgSuspension *susp,
                        const double *phi,
                        uintptr_t phi_depth,
                        const double *psi,
                        uintptr_t psi_depth,
                        double q,
                        double *out);

/**
 * Rate function `I(s)` of flow averages of `psi` under the equilibrium of
 * `phi`, with the maximizing tilt `q*`. Returns `OG_STATUS_OUTSIDE_RANGE`
 * outside the open feasible interval.
 *
 * # Safety
 * Tables must hold `size^depth` doubles; `rate` and `q_star` must be writable.
 */
OgStatus og_rate_function(const OgSuspension *susp,
                          const double *phi,
                          uintptr_t phi_depth,
                          const double *psi,
                          uintptr_t psi_depth,
                          double s,
                          double *rate,
                          double *q_star);

/**
 * Closure of the set of attainable flow averages of `psi`.
 *
 * # Safety
 * `psi` must hold `size^depth` doubles; `min` and `max` must be writable.
 */
OgStatus og_feasible_range(const OgSuspension *susp,
                           const double *psi,
                           uintptr_t psi_depth,
                           double *min,
                           double *max);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ORBITGLUE_H */
