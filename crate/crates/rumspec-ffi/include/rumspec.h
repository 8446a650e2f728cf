#ifndef RUMSPEC_H
#define RUMSPEC_H

/* Generated by cbindgen from the rumspec-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum {
  RUMSPEC_STATUS_OK = 0,
  RUMSPEC_STATUS_NULL_POINTER = 1,
  RUMSPEC_STATUS_INVALID_UTF8 = 2,
  RUMSPEC_STATUS_INVALID_ARGUMENT = 3,
  RUMSPEC_STATUS_DOMAIN_ERROR = 4,
} RumspecStatus;

/**
 * Opaque crystal framework handle.
 */
typedef struct RumspecFramework RumspecFramework;

/**
 * Opaque spectrum scan report handle.
 */
typedef struct RumspecReport RumspecReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The most recent error message on this thread, or null. The caller owns
 * the returned string and must free it with `rumspec_string_free`.
 */
char *rumspec_last_error_message(void);

/**
 * Release a string returned by this library.
 *
 * # Safety
 * `s` must be a pointer previously returned by a rumspec function, or null.
 */
void rumspec_string_free(char *s);

/**
 * Construct a built-in gallery framework by name (grid, honeycomb, kagome,
 * kagome3d, octahedron, kite, bipyramid).
 *
 * # Safety
 * `name` must be a valid NUL-terminated string and `out` a valid pointer.
 */
RumspecStatus rumspec_framework_gallery(const char *name, RumspecFramework **out);

/**
 * Parse a framework from its JSON description.
 *
 * # Safety
 * `text` must be a valid NUL-terminated string and `out` a valid pointer.
 */
RumspecStatus rumspec_framework_from_json(const char *text, RumspecFramework **out);

/**
 * Canonical JSON of a framework; null on error.
 *
 * # Safety
 * `fw` must be a live handle from this library.
 */
char *rumspec_framework_to_json(const RumspecFramework *fw);

/**
 * # Safety
 * `fw` must be a live handle from this library, or null.
 */
void rumspec_framework_free(RumspecFramework *fw);

/**
 * Spatial dimension of the framework; 0 if the handle is null.
 *
 * # Safety
 * `fw` must be a live handle from this library, or null.
 */
uintptr_t rumspec_framework_dimension(const RumspecFramework *fw);

/**
 * Number of motif joints; 0 if the handle is null.
 *
 * # Safety
 * `fw` must be a live handle from this library, or null.
 */
uintptr_t rumspec_framework_joint_count(const RumspecFramework *fw);

/**
 * Number of motif edges; 0 if the handle is null.
 *
 * # Safety
 * `fw` must be a live handle from this library, or null.
 */
uintptr_t rumspec_framework_edge_count(const RumspecFramework *fw);

/**
 * Scan the rigid-unit-mode spectrum on a uniform torus grid. `threads = 0`
 * uses all available cores.
 *
 * # Safety
 * `fw` must be a live handle and `out` a valid pointer.
 */
RumspecStatus rumspec_scan_rum(const RumspecFramework *fw,
                               uintptr_t resolution,
                               double tol,
                               uintptr_t threads,
                               RumspecReport **out);

/**
 * Total number of samples in the scan; 0 if the handle is null.
 *
 * # Safety
 * `report` must be a live handle from this library, or null.
 */
uintptr_t rumspec_report_sample_count(const RumspecReport *report);

/**
 * Number of flagged rank-degeneracy points; 0 if the handle is null.
 *
 * # Safety
 * `report` must be a live handle from this library, or null.
 */
uintptr_t rumspec_report_flagged_count(const RumspecReport *report);

/**
 * Fetch flagged point `index`: its phases (dimension many values),
 * sigma_min and kernel dimension.
 *
 * # Safety
 * `report` must be a live handle; `thetas_out` must point to at least
 * `dimension` doubles; the scalar outputs must be valid or null.
 */
RumspecStatus rumspec_report_flagged_get(const RumspecReport *report,
                                         uintptr_t index,
                                         double *thetas_out,
                                         double *sigma_out,
                                         uintptr_t *kernel_dim_out);

/**
 * CSV rendering of a scan report (theta columns, sigma_min, flagged);
 * null on error.
 *
 * # Safety
 * `report` must be a live handle from this library.
 */
char *rumspec_report_to_csv(const RumspecReport *report);

/**
 * # Safety
 * `report` must be a live handle from this library, or null.
 */
void rumspec_report_free(RumspecReport *report);

/**
 * Test whether `base` (interleaved per joint, `base_len = dimension *
 * joint_count` complex entries split into re/im arrays) is a kernel vector
 * of the transfer function at multifactor `omega`: the factor-periodic
 * field is a flex exactly when the relative residual is at most `tol`.
 *
 * # Safety
 * The array pointers must reference buffers of the stated lengths.
 */
RumspecStatus rumspec_check_factor_flex(const RumspecFramework *fw,
                                        const double *omega_re,
                                        const double *omega_im,
                                        const double *base_re,
                                        const double *base_im,
                                        uintptr_t base_len,
                                        double tol,
                                        uint8_t *is_flex_out,
                                        double *residual_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RUMSPEC_H */
