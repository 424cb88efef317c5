#ifndef SKFB_H
#define SKFB_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result of every fallible call.
 */
typedef enum SkfbStatus {
  SKFB_STATUS_OK = 0,
  SKFB_STATUS_NULL_POINTER = 1,
  SKFB_STATUS_INVALID_ARGUMENT = 2,
  SKFB_STATUS_CONFIG = 3,
  SKFB_STATUS_DEGENERATE = 4,
  SKFB_STATUS_IO = 5,
  SKFB_STATUS_PANIC = 6,
} SkfbStatus;

/**
 * Handling of taps that fall outside the volume.
 */
typedef enum SkfbBoundary {
  SKFB_BOUNDARY_REFLECT = 0,
  SKFB_BOUNDARY_CLAMP = 1,
  SKFB_BOUNDARY_PERIODIC = 2,
} SkfbBoundary;

/**
 * Opaque volume handle.
 */
typedef struct SkfbVolume SkfbVolume;

/**
 * Metrics of a filtered region against its original. `enl` and `psnr` are
 * `INFINITY` for a flat region and a perfect match.
 */
typedef struct SkfbMetrics {
  double si;
  double ssi;
  double smpi;
  double enl;
  double mse;
  double psnr;
} SkfbMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *skfb_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *skfb_version(void);

/**
 * Copies `len` row-major samples into a new node-centered volume.
 *
 * # Safety
 * `dims` must point to `ndim` values and `data` to `len` doubles.
 */
enum SkfbStatus skfb_volume_new(const size_t *dims,
                                size_t ndim,
                                const double *data,
                                size_t len,
                                struct SkfbVolume **out);

/**
 * Releases a handle. NULL is ignored.
 *
 * # Safety
 * `v` must come from this library and not be used afterwards.
 */
void skfb_volume_free(struct SkfbVolume *v);

/**
 * Number of axes, or 0 for NULL.
 *
 * # Safety
 * `v` must be NULL or a live handle.
 */
size_t skfb_volume_ndim(const struct SkfbVolume *v);

/**
 * Number of samples, or 0 for NULL.
 *
 * # Safety
 * `v` must be NULL or a live handle.
 */
size_t skfb_volume_len(const struct SkfbVolume *v);

/**
 * Writes the axis lengths to `out`, which holds `cap` entries.
 *
 * # Safety
 * `v` must be a live handle and `out` must hold `cap` values.
 */
enum SkfbStatus skfb_volume_dims(const struct SkfbVolume *v, size_t *out, size_t cap);

/**
 * Borrowed pointer to the row-major samples, valid while the handle lives.
 *
 * # Safety
 * `v` must be NULL or a live handle.
 */
const double *skfb_volume_data(const struct SkfbVolume *v);

/**
 * Reads a VOL1 file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum SkfbStatus skfb_volume_load(const char *path, struct SkfbVolume **out);

/**
 * Writes a VOL1 file.
 *
 * # Safety
 * `v` must be a live handle and `path` a NUL-terminated string.
 */
enum SkfbStatus skfb_volume_save(const struct SkfbVolume *v, const char *path);

/**
 * 2-D slice at `index` along axis 0 of a 3-D volume.
 *
 * # Safety
 * `v` must be a live handle and `out` writable.
 */
enum SkfbStatus skfb_volume_slice(const struct SkfbVolume *v,
                                  size_t index,
                                  struct SkfbVolume **out);

/**
 * Shepp-Logan phantom (modified contrast) rendered at 400 pixels, resized
 * to `size x size` and stacked `depth` times.
 *
 * # Safety
 * `out` must be writable.
 */
enum SkfbStatus skfb_phantom_volume(size_t size, size_t depth, struct SkfbVolume **out);

/**
 * Separable Gaussian blur; `sigma` is in samples.
 *
 * # Safety
 * `v` must be a live handle and `out` writable.
 */
enum SkfbStatus skfb_gaussian_filter(const struct SkfbVolume *v,
                                     double sigma,
                                     enum SkfbBoundary boundary,
                                     struct SkfbVolume **out);

/**
 * Bilateral filter; `sigma_spatial` in samples, `sigma_range` in intensity.
 *
 * # Safety
 * `v` must be a live handle and `out` writable.
 */
enum SkfbStatus skfb_bilateral_filter(const struct SkfbVolume *v,
                                      double sigma_spatial,
                                      double sigma_range,
                                      enum SkfbBoundary boundary,
                                      struct SkfbVolume **out);

/**
 * Applies an operator described by JSON, e.g.
 * `{"op":"wavelet","family":"haar","levels":2,"mode":"hard","lambda":"universal"}`.
 *
 * # Safety
 * `v` must be a live handle, `json` NUL-terminated and `out` writable.
 */
enum SkfbStatus skfb_apply_operator(const struct SkfbVolume *v,
                                    const char *json,
                                    struct SkfbVolume **out);

/**
 * Speckle and fidelity metrics of `filtered` against `original`, both
 * already cropped to the region of interest.
 *
 * # Safety
 * Both handles must be live and `out` writable.
 */
enum SkfbStatus skfb_metrics(const struct SkfbVolume *original,
                             const struct SkfbVolume *filtered,
                             double peak,
                             struct SkfbMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKFB_H */
