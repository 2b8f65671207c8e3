#ifndef DEFOCUS_H
#define DEFOCUS_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DefocusStatus {
  DEFOCUS_STATUS_OK = 0,
  DEFOCUS_STATUS_NULL_POINTER = 1,
  DEFOCUS_STATUS_INVALID_ARGUMENT = 2,
  DEFOCUS_STATUS_IO = 3,
  DEFOCUS_STATUS_FORMAT = 4,
  DEFOCUS_STATUS_SHAPE = 5,
  DEFOCUS_STATUS_DOMAIN = 6,
  DEFOCUS_STATUS_PARSE = 7,
  DEFOCUS_STATUS_PANIC = 8,
} DefocusStatus;

/**
 * Refined sharpness map, one double per pixel.
 */
typedef struct DefocusBlurMap DefocusBlurMap;

/**
 * Grayscale image with samples in [0, 1].
 */
typedef struct DefocusImage DefocusImage;

/**
 * Binary mask, one byte (0 or 1) per pixel.
 */
typedef struct DefocusMask DefocusMask;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL after a success.
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *defocus_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *defocus_version(void);

/**
 * Copies `height * width` row-major samples into a new image.
 *
 * # Safety
 * `data` must point to `height * width` doubles; `out` must be writable.
 */
enum DefocusStatus defocus_image_new(size_t height,
                                     size_t width,
                                     const double *data,
                                     struct DefocusImage **out);

/**
 * Loads a PGM or PNG file as grayscale.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum DefocusStatus defocus_image_load(const char *path, struct DefocusImage **out);

/**
 * # Safety
 * `image` must be NULL or a handle from this library not yet freed.
 */
void defocus_image_free(struct DefocusImage *image);

/**
 * # Safety
 * `image` must be a live handle; `height` and `width` must be writable.
 */
enum DefocusStatus defocus_image_size(const struct DefocusImage *image,
                                      size_t *height,
                                      size_t *width);

/**
 * Computes the refined blur map. `config_text` is configuration-file text or NULL for defaults.
 *
 * # Safety
 * `image` must be a live handle, `config_text` NULL or NUL-terminated, `out` writable.
 */
enum DefocusStatus defocus_blur_map(const struct DefocusImage *image,
                                    const char *config_text,
                                    struct DefocusBlurMap **out);

/**
 * Borrows the map values; valid while `map` is alive.
 *
 * # Safety
 * `map` must be a live handle; `data` and `len` must be writable.
 */
enum DefocusStatus defocus_blur_map_data(const struct DefocusBlurMap *map,
                                         const double **data,
                                         size_t *len);

/**
 * # Safety
 * `map` must be NULL or a handle from this library not yet freed.
 */
void defocus_blur_map_free(struct DefocusBlurMap *map);

/**
 * Segments the in-focus region. `config_text` is configuration-file text or NULL for defaults.
 *
 * # Safety
 * `image` must be a live handle, `config_text` NULL or NUL-terminated, `out` writable.
 */
enum DefocusStatus defocus_segment(const struct DefocusImage *image,
                                   const char *config_text,
                                   struct DefocusMask **out);

/**
 * Copies `height * width` bytes (nonzero means set) into a new mask.
 *
 * # Safety
 * `bits` must point to `height * width` bytes; `out` must be writable.
 */
enum DefocusStatus defocus_mask_new(size_t height,
                                    size_t width,
                                    const uint8_t *bits,
                                    struct DefocusMask **out);

/**
 * Borrows the mask bytes (0 or 1, row-major); valid while `mask` is alive.
 *
 * # Safety
 * `mask` must be a live handle; the outputs must be writable.
 */
enum DefocusStatus defocus_mask_data(const struct DefocusMask *mask,
                                     const uint8_t **data,
                                     size_t *height,
                                     size_t *width);

/**
 * # Safety
 * `mask` must be NULL or a handle from this library not yet freed.
 */
void defocus_mask_free(struct DefocusMask *mask);

/**
 * Precision and recall of `mask` against `gt`; an empty denominator gives 1.
 *
 * # Safety
 * `mask` and `gt` must be live handles; `precision` and `recall` writable.
 */
enum DefocusStatus defocus_precision_recall(const struct DefocusMask *mask,
                                            const struct DefocusMask *gt,
                                            double *precision,
                                            double *recall);

/**
 * Weighted harmonic F-measure; 0 when both inputs are 0.
 */
double defocus_f_alpha(double precision, double recall, double alpha_sq);

/**
 * EDAS ranking over a row-major `n_alternatives x n_criteria` score matrix.
 *
 * `is_cost`, `weights` and `means` may be NULL (all benefit, equal weights,
 * column means). `canonical` nonzero selects the highest-score-wins variant.
 * `appraisal` may be NULL; `rank_out` receives 1-based ranks.
 *
 * # Safety
 * Non-NULL arrays must hold the stated number of elements.
 */
enum DefocusStatus defocus_edas_rank(const double *scores,
                                     size_t n_alternatives,
                                     size_t n_criteria,
                                     const uint8_t *is_cost,
                                     const double *weights,
                                     const double *means,
                                     int32_t canonical,
                                     double *appraisal,
                                     uint32_t *rank_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEFOCUS_H */
