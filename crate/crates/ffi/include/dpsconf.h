#ifndef DPSCONF_H
#define DPSCONF_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * 16-bit PNG, value / 256, 0 marks invalid.
 */
#define DPS_FORMAT_KITTI_PNG16 0

/**
 * Portable float map; non-finite values mark invalid.
 */
#define DPS_FORMAT_PFM 1

/**
 * Call outcome. Codes 2 to 4 match the command-line exit codes.
 */
typedef enum {
  DPS_STATUS_OK = 0,
  /**
   * Null pointer, non-UTF-8 string or unknown enum value.
   */
  DPS_STATUS_INVALID_ARGUMENT = 1,
  DPS_STATUS_VALIDATION = 2,
  DPS_STATUS_IO = 3,
  DPS_STATUS_EXTERNAL = 4,
  /**
   * A Rust panic was caught at the boundary.
   */
  DPS_STATUS_INTERNAL = 6,
} DpsStatus;

typedef struct DpsConfidence DpsConfidence;

typedef struct DpsDisparity DpsDisparity;

typedef struct DpsImage DpsImage;

typedef struct DpsMatcher DpsMatcher;

/**
 * Summary of one sparsification run.
 */
typedef struct {
  double epsilon;
  double auc;
  double optimal_auc;
  size_t n_pixels;
} DpsAucReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *dps_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dps_version(void);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
DpsStatus dps_image_load(const char *path, DpsImage **out);

/**
 * Copies `width * height * channels` row-major bytes into a new image.
 * `channels` is 1 (gray) or 3 (RGB).
 *
 * # Safety
 * `data` must point to that many readable bytes; `out` must be writable.
 */
DpsStatus dps_image_new(size_t width,
                        size_t height,
                        size_t channels,
                        const uint8_t *data,
                        DpsImage **out);

/**
 * # Safety
 * `image` must be a live handle or NULL.
 */
size_t dps_image_width(const DpsImage *image);

/**
 * # Safety
 * `image` must be a live handle or NULL.
 */
size_t dps_image_height(const DpsImage *image);

/**
 * # Safety
 * `image` must come from this library and not be freed twice.
 */
void dps_image_free(DpsImage *image);

/**
 * Built-in census/semi-global matcher searching `[0, d_max]` with the
 * remaining parameters at their defaults.
 *
 * # Safety
 * `out` must be writable.
 */
DpsStatus dps_matcher_new_builtin(uint32_t d_max, DpsMatcher **out);

/**
 * Matcher that runs `command_template` (with `{left}`, `{right}` and
 * `{out}` placeholders) under `sh -c` in a fresh subdirectory of
 * `work_dir`, expecting a disparity file in `format`.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
DpsStatus dps_matcher_new_external(const char *command_template,
                                   const char *work_dir,
                                   uint32_t format,
                                   double timeout_secs,
                                   uint32_t d_max,
                                   DpsMatcher **out);

/**
 * # Safety
 * `matcher` must come from this library and not be freed twice.
 */
void dps_matcher_free(DpsMatcher *matcher);

/**
 * # Safety
 * Handles must be live; `out` must be writable.
 */
DpsStatus dps_match(const DpsMatcher *matcher,
                    const DpsImage *left,
                    const DpsImage *right,
                    DpsDisparity **out);

/**
 * Loads a disparity map; for ground truth, values above `d_max` become
 * invalid when `d_max > 0`.
 *
 * # Safety
 * `path` must be NUL-terminated; `out` must be writable.
 */
DpsStatus dps_disparity_load(const char *path, uint32_t format, double d_max, DpsDisparity **out);

/**
 * # Safety
 * `disparity` must be live; `path` must be NUL-terminated.
 */
DpsStatus dps_disparity_save(const DpsDisparity *disparity, const char *path, uint32_t format);

/**
 * # Safety
 * `disparity` must be a live handle or NULL.
 */
size_t dps_disparity_width(const DpsDisparity *disparity);

/**
 * # Safety
 * `disparity` must be a live handle or NULL.
 */
size_t dps_disparity_height(const DpsDisparity *disparity);

/**
 * Copies the row-major values into `out` (length `width * height`),
 * writing NaN at invalid pixels.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
DpsStatus dps_disparity_read(const DpsDisparity *disparity, double *out, size_t len);

/**
 * # Safety
 * `disparity` must come from this library and not be freed twice.
 */
void dps_disparity_free(DpsDisparity *disparity);

/**
 * Runs the plane sweep over `shifts` (strictly increasing, containing 0,
 * at least two) and derives unreliability and confidence. `sigma <= 0`
 * selects the default `d_max * ln 2`; `parallelism` 0 runs every shift
 * concurrently.
 *
 * # Safety
 * Handles must be live; `shifts` must point to `n_shifts` integers;
 * `out` must be writable.
 */
DpsStatus dps_sweep_confidence(const DpsMatcher *matcher,
                               const DpsImage *left,
                               const DpsImage *right,
                               const int32_t *shifts,
                               size_t n_shifts,
                               double sigma,
                               size_t parallelism,
                               DpsConfidence **out);

/**
 * # Safety
 * `confidence` must be a live handle or NULL.
 */
size_t dps_confidence_width(const DpsConfidence *confidence);

/**
 * # Safety
 * `confidence` must be a live handle or NULL.
 */
size_t dps_confidence_height(const DpsConfidence *confidence);

/**
 * Copies the confidence values, NaN where undefined.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
DpsStatus dps_confidence_read(const DpsConfidence *confidence, double *out, size_t len);

/**
 * Copies the unreliability values, NaN where undefined.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
DpsStatus dps_confidence_read_unreliability(const DpsConfidence *confidence,
                                            double *out,
                                            size_t len);

/**
 * New handle holding a copy of the zero-shift disparity.
 *
 * # Safety
 * `confidence` must be live; `out` must be writable.
 */
DpsStatus dps_confidence_anchor(const DpsConfidence *confidence, DpsDisparity **out);

/**
 * Scores the confidence against `gt` with bad-pixel threshold `tau`,
 * sampling 20 evenly spaced densities.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
DpsStatus dps_confidence_auc(const DpsConfidence *confidence,
                             const DpsDisparity *gt,
                             double tau,
                             DpsAucReport *out);

/**
 * `eps + (1 - eps) ln(1 - eps)` for `eps` in `[0, 1)`.
 *
 * # Safety
 * `out` must be writable.
 */
DpsStatus dps_optimal_auc(double epsilon, double *out);

/**
 * # Safety
 * `confidence` must come from this library and not be freed twice.
 */
void dps_confidence_free(DpsConfidence *confidence);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DPSCONF_H */
