#ifndef BOUQUET_LAB_H
#define BOUQUET_LAB_H

/* Generated by cbindgen from crates/bouquet-ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BqRegionKind {
  BQ_REGION_KIND_POLYGON = 0,
  BQ_REGION_KIND_STRIP = 1,
  BQ_REGION_KIND_SECTOR = 2,
  BQ_REGION_KIND_BOUNDARY = 3,
} BqRegionKind;

typedef enum BqStatus {
  BQ_STATUS_OK = 0,
  BQ_STATUS_NULL_POINTER = 1,
  BQ_STATUS_INVALID_ARGUMENT = 2,
  BQ_STATUS_OVERFLOW = 3,
  BQ_STATUS_BOUNDARY = 4,
  BQ_STATUS_NON_CONVERGENCE = 5,
  BQ_STATUS_BRANCH_VIOLATION = 6,
  BQ_STATUS_COVERAGE_VIOLATION = 7,
  BQ_STATUS_NUMERICAL = 8,
  BQ_STATUS_PANIC = 9,
} BqStatus;

/**
 * Opaque family member with its inverse-branch solver.
 */
typedef struct BqFamily BqFamily;

/**
 * Opaque region scheme.
 */
typedef struct BqScheme BqScheme;

typedef struct BqComplex {
  double re;
  double im;
} BqComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread; valid until the next failing
 * call on the same thread. Never null.
 */
const char *bq_last_error(void);

/**
 * Library version as a static string.
 */
const char *bq_version(void);

/**
 * Creates the member f = λ Σ exp(ω^k z) with p terms.
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum BqStatus bq_family_new(size_t p, double lambda, struct BqFamily **out);

/**
 * # Safety
 * `fam` is null or a handle from `bq_family_new` not yet freed.
 */
void bq_family_free(struct BqFamily *fam);

/**
 * f(z).
 *
 * # Safety
 * `fam` is a live handle; `out` is valid for one write.
 */
enum BqStatus bq_family_f(const struct BqFamily *fam, struct BqComplex z, struct BqComplex *out);

/**
 * f'(z).
 *
 * # Safety
 * `fam` is a live handle; `out` is valid for one write.
 */
enum BqStatus bq_family_f_prime(const struct BqFamily *fam,
                                struct BqComplex z,
                                struct BqComplex *out);

/**
 * ε(z) = Σ_{k≥1} exp((ω^k − 1) z), so that f = λ e^z (1 + ε).
 *
 * # Safety
 * `fam` is a live handle; `out` is valid for one write.
 */
enum BqStatus bq_family_epsilon(const struct BqFamily *fam,
                                struct BqComplex z,
                                struct BqComplex *out);

/**
 * M(r, f) = max over |z| = r of |f(z)|.
 *
 * # Safety
 * `fam` is a live handle; `out` is valid for one write.
 */
enum BqStatus bq_family_max_modulus(const struct BqFamily *fam, double r, double *out);

/**
 * log M(r, f), finite for any finite r > 0.
 *
 * # Safety
 * `fam` is a live handle; `out` is valid for one write.
 */
enum BqStatus bq_family_log_max_modulus(const struct BqFamily *fam, double r, double *out);

/**
 * Inverse branch L_j: the solution of f(z) = w in the strip R(j) on the
 * dominant side of V_0.
 *
 * # Safety
 * `fam` is a live handle; `out` is valid for one write.
 */
enum BqStatus bq_inverse_branch(const struct BqFamily *fam,
                                struct BqComplex w,
                                int64_t j,
                                struct BqComplex *out);

/**
 * Hair point h_s(t) for the periodic itinerary `digits[0..len]`.
 *
 * # Safety
 * `fam` is a live handle; `digits` points to `len` values; `out` is valid
 * for one write.
 */
enum BqStatus bq_hair_point(const struct BqFamily *fam,
                            const int64_t *digits,
                            size_t len,
                            double t,
                            struct BqComplex *out);

/**
 * Scheme with default constants for (p, λ).
 *
 * # Safety
 * `out` must be valid for one pointer write.
 */
enum BqStatus bq_scheme_new(size_t p, double lambda, struct BqScheme **out);

/**
 * Scheme whose c is calibrated for symbolic dynamics on `k_bound` symbols.
 *
 * # Safety
 * `scheme` is a live handle; `out` must be valid for one pointer write.
 */
enum BqStatus bq_scheme_dynamics(const struct BqScheme *scheme,
                                 uint32_t k_bound,
                                 struct BqScheme **out);

/**
 * Parses and validates a scheme from its JSON document.
 *
 * # Safety
 * `json` is a NUL-terminated string; `out` must be valid for one pointer write.
 */
enum BqStatus bq_scheme_from_json(const char *json, struct BqScheme **out);

/**
 * # Safety
 * `scheme` is null or a live handle.
 */
void bq_scheme_free(struct BqScheme *scheme);

/**
 * JSON document of the scheme; release with `bq_string_free`.
 *
 * # Safety
 * `scheme` is a live handle; `out` must be valid for one pointer write.
 */
enum BqStatus bq_scheme_to_json(const struct BqScheme *scheme, char **out);

/**
 * The constant c of the scheme.
 *
 * # Safety
 * `scheme` is a live handle.
 */
double bq_scheme_c(const struct BqScheme *scheme);

/**
 * # Safety
 * `s` is null or a string returned by this library and not yet freed.
 */
void bq_string_free(char *s);

/**
 * Region of z: polygon, strip Q_k, sector T_j, or boundary. The index is 0
 * for the polygon and the boundary.
 *
 * # Safety
 * `scheme` is a live handle; the out pointers are valid for one write.
 */
enum BqStatus bq_classify(const struct BqScheme *scheme,
                          struct BqComplex z,
                          enum BqRegionKind *out_kind,
                          size_t *out_index);

/**
 * k with (2k−1)π < Im z < (2k+1)π; `BQ_STATUS_BOUNDARY` on a strip edge.
 *
 * # Safety
 * `out` is valid for one write.
 */
enum BqStatus bq_strip_index(struct BqComplex z, int64_t *out);

/**
 * Periodic point z(s) of the pure period `digits[0..len]`, with its cycle
 * multiplier and the extended-precision closure residual |f^n(z) − z|.
 * Use a scheme from `bq_scheme_dynamics`.
 *
 * # Safety
 * Handles are live; `digits` points to `len` values; out pointers are valid
 * for one write each (`out_multiplier` and `out_residual` may be null).
 */
enum BqStatus bq_periodic_point(const struct BqFamily *fam,
                                const struct BqScheme *scheme,
                                const int64_t *digits,
                                size_t len,
                                struct BqComplex *out_z,
                                struct BqComplex *out_multiplier,
                                double *out_residual);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BOUQUET_LAB_H */
