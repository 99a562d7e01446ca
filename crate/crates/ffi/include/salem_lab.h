#ifndef SALEM_LAB_H
#define SALEM_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every call.
typedef enum SalemStatus {
  SALEM_STATUS_OK = 0,
  SALEM_STATUS_NULL_POINTER = 1,
  SALEM_STATUS_INVALID_UTF8 = 2,
  // Bad field description: not a prime power, even characteristic, bad modulus.
  SALEM_STATUS_INVALID_FIELD = 3,
  // Bad argument: dimension, element code, moment, parameter range.
  SALEM_STATUS_INVALID_ARGUMENT = 4,
  // Grid or work budget exceeded.
  SALEM_STATUS_LIMIT_EXCEEDED = 5,
  // Parameters outside the regime a routine supports.
  SALEM_STATUS_UNSUPPORTED = 6,
  // An internal identity check failed.
  SALEM_STATUS_ASSERTION_FAILED = 7,
  SALEM_STATUS_IO = 8,
  SALEM_STATUS_PARSE = 9,
  // A panic was caught at the boundary.
  SALEM_STATUS_INTERNAL = 10,
} SalemStatus;

// A finite field F_q.
typedef struct SalemField SalemField;

// A set of points in F_q^d.
typedef struct SalemPointSet SalemPointSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer stays
// valid until the next call into this library on the same thread.
const char *salem_last_error_message(void);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void salem_string_free(char *s);

// Parses a field description such as `"7"`, `"3^2"` or `"3^2/1,0,1"`.
//
// # Safety
// `spec` must be a NUL-terminated string; `out` must be writable.
enum SalemStatus salem_field_new(const char *spec, struct SalemField **out_field);

// # Safety
// `field` must be null or a handle from [`salem_field_new`], not yet freed.
void salem_field_free(struct SalemField *field);

// Order `q` of the field.
//
// # Safety
// `field` must be a live handle; `q` must be writable.
enum SalemStatus salem_field_order(const struct SalemField *field, uint32_t *q);

// Builds a point set from vector codes (base-q numerals, first coordinate
// least significant). Duplicates are removed.
//
// # Safety
// `codes` must point to `len` values (or be null when `len` is 0).
enum SalemStatus salem_pointset_new(const struct SalemField *field,
                                    size_t dim,
                                    const uint64_t *codes,
                                    size_t len,
                                    struct SalemPointSet **out_set);

// # Safety
// `set` must be null or a live point set handle.
void salem_pointset_free(struct SalemPointSet *set);

// Number of points in the set.
//
// # Safety
// `set` must be a live handle; `len` must be writable.
enum SalemStatus salem_pointset_len(const struct SalemPointSet *set, size_t *len);

// Copies up to `cap` sorted point codes into `buf` and stores the set size in
// `len`. Pass `cap = 0` to query the size only.
//
// # Safety
// `buf` must have room for `cap` values.
enum SalemStatus salem_pointset_codes(const struct SalemPointSet *set,
                                      uint64_t *buf,
                                      size_t cap,
                                      size_t *len);

// Additive energy `Lambda_k(E)`.
//
// # Safety
// `set` must be a live handle; `lambda` must be writable.
enum SalemStatus salem_additive_energy(const struct SalemPointSet *set,
                                       uint32_t k,
                                       uint64_t *lambda);

// Normalized Fourier moment `||A^||_{L^u}`; `u = 0` selects `L^infinity`.
//
// # Safety
// `set` must be a live handle; `norm` must be writable.
enum SalemStatus salem_lu_norm(const struct SalemPointSet *set, uint32_t u, double *norm);

// Point-sphere incidences. Sphere `i` has centre code `centers[i]` and
// radius code `radii[i]`.
//
// # Safety
// `centers` and `radii` must each point to `n_spheres` values.
enum SalemStatus salem_incidences(const struct SalemPointSet *points,
                                  const uint64_t *centers,
                                  const uint32_t *radii,
                                  size_t n_spheres,
                                  uint64_t *count);

// Totally isotropic subspace of F_q^d with `d/2` dimensions, as a point set.
//
// # Safety
// `field` must be a live handle; `out_set` must be writable.
enum SalemStatus salem_isotropic_subspace(const struct SalemField *field,
                                          size_t dim,
                                          struct SalemPointSet **out_set);

// Sidon parabola in F_q^d. The result lives in the field with the default
// modulus for `q`.
//
// # Safety
// `field` must be a live handle; `out_set` must be writable.
enum SalemStatus salem_sidon_parabola(const struct SalemField *field,
                                      size_t dim,
                                      struct SalemPointSet **out_set);

// Random Salem subset of an isotropic subspace with `s = s_num / s_den`,
// using the default acceptance constant and attempt cap.
//
// # Safety
// `field` must be a live handle; `out_set` must be writable.
enum SalemStatus salem_salem_subset(const struct SalemField *field,
                                    size_t dim,
                                    int64_t s_num,
                                    int64_t s_den,
                                    uint64_t seed,
                                    struct SalemPointSet **out_set);

// Runs a sweep from a JSON configuration and returns the rows as JSON. The
// returned string must be released with [`salem_string_free`].
//
// # Safety
// `config_json` must be a NUL-terminated string; `out_json` must be writable.
enum SalemStatus salem_sweep_json(const char *config_json, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SALEM_LAB_H */
