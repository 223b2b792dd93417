#ifndef GSA_DOF_H
#define GSA_DOF_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GsaStatus {
  GSA_STATUS_OK = 0,
  GSA_STATUS_NULL_POINTER = 1,
  GSA_STATUS_INVALID_ARGUMENT = 2,
  GSA_STATUS_INFEASIBLE = 3,
  GSA_STATUS_NEEDS_EXTENSION = 4,
  GSA_STATUS_NUMERICAL = 5,
  GSA_STATUS_OVERFLOW = 6,
  GSA_STATUS_INTERNAL = 7,
  GSA_STATUS_PANIC = 8,
} GsaStatus;

typedef enum GsaRegimeKind {
  GSA_REGIME_KIND_RELAY_LIMITED = 0,
  GSA_REGIME_KIND_PLATEAU = 1,
  GSA_REGIME_KIND_SLOPE = 2,
  GSA_REGIME_KIND_SOURCE_LIMITED = 3,
} GsaRegimeKind;

// Opaque scheme handle.
typedef struct GsaScheme GsaScheme;

// `num / den` in lowest terms with `den > 0`.
typedef struct GsaRational {
  int64_t num;
  int64_t den;
} GsaRational;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failure on this thread, or null. Valid until the
// next failing call on the same thread.
const char *gsa_last_error(void);

// Upper bound on the sum DoF for K users with M antennas and N relay antennas.
//
// # Safety
// `out` must be null or valid for writes.
enum GsaStatus gsa_upper_bound(uint32_t k, uint32_t m, uint32_t n, struct GsaRational *out);

// Achievable sum DoF of the alignment construction.
//
// # Safety
// `out` must be null or valid for writes.
enum GsaStatus gsa_achievable_dof(uint32_t k, uint32_t m, uint32_t n, struct GsaRational *out);

// Branch of the upper bound; `beta` is 0 for the relay- and source-limited
// branches.
//
// # Safety
// `kind` and `beta` must be null or valid for writes.
enum GsaStatus gsa_regime(uint32_t k,
                          uint32_t m,
                          uint32_t n,
                          enum GsaRegimeKind *kind,
                          uint32_t *beta);

// Sample channels from `seed`, extend if needed, and build the uplink
// scheme and downlink precoder for corner `beta`.
//
// # Safety
// `out` must be null or valid for writes. On success `*out` owns a handle
// to release with `gsa_scheme_free`.
enum GsaStatus gsa_scheme_synthesize(uint32_t k,
                                     uint32_t m,
                                     uint32_t n,
                                     uint32_t beta,
                                     uint64_t seed,
                                     struct GsaScheme **out);

// # Safety
// `scheme` must be null or a handle from `gsa_scheme_synthesize` not yet freed.
void gsa_scheme_free(struct GsaScheme *scheme);

// Dimensions of the (possibly extended) scheme.
//
// # Safety
// `scheme` must be a live handle; outputs must be null or valid for writes.
enum GsaStatus gsa_scheme_info(const struct GsaScheme *scheme,
                               uint64_t *extension,
                               size_t *d_total,
                               double *alignment_residual,
                               double *b_cond);

// Re-check the alignment conditions on the scheme's channels.
//
// # Safety
// `scheme` must be a live handle; `passed` must be null or valid for writes.
enum GsaStatus gsa_scheme_verify(const struct GsaScheme *scheme, bool *passed);

// One frame through both phases. `user_error` is NaN when the downlink
// precoder is infeasible.
//
// # Safety
// `scheme` must be a live handle; outputs must be null or valid for writes.
enum GsaStatus gsa_scheme_simulate(const struct GsaScheme *scheme,
                                   double noise_var,
                                   double *relay_error,
                                   double *user_error);

// Scheme as JSON. Release the string with `gsa_string_free`.
//
// # Safety
// `scheme` must be a live handle; `out` must be null or valid for writes.
enum GsaStatus gsa_scheme_to_json(const struct GsaScheme *scheme, char **out);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void gsa_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GSA_DOF_H */
