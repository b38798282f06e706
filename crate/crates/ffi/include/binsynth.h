#ifndef BINSYNTH_H
#define BINSYNTH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum {
  BINSYNTH_STATUS_OK = 0,
  BINSYNTH_STATUS_NULL_POINTER = 1,
  BINSYNTH_STATUS_INVALID_ARGUMENT = 2,
  BINSYNTH_STATUS_CAPTION_PARSE = 3,
  BINSYNTH_STATUS_GEOMETRY = 4,
  BINSYNTH_STATUS_IO = 5,
  /*
   A caller-provided buffer has the wrong size.
   */
  BINSYNTH_STATUS_BUFFER_SIZE = 6,
  BINSYNTH_STATUS_PANIC = 7,
} BinsynthStatus;

/*
 A coarse or fine azimuth state matrix, `[source][azimuth_bin][time_bin]`.
 */
typedef struct BinsynthMatrix BinsynthMatrix;

/*
 An attribute record: scene size plus per-source labels.
 */
typedef struct BinsynthRecord BinsynthRecord;

/*
 A sampled scene: room, microphone array and source trajectories.
 */
typedef struct BinsynthScene BinsynthScene;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or NULL. Valid until
 the next call into the library from the same thread.
 */
const char *binsynth_last_error(void);

/*
 Library version, a static string.
 */
const char *binsynth_version(void);

/*
 # Safety
 `s` must be NULL or a string returned by this library, freed once.
 */
void binsynth_string_free(char *s);

/*
 Parse a spatial caption into a record.

 # Safety
 `text` must be a NUL-terminated string and `out` a valid pointer.
 */
BinsynthStatus binsynth_caption_parse(const char *text, BinsynthRecord **out_record);

/*
 Build a record from its JSON form.

 # Safety
 `json` must be a NUL-terminated string and `out_record` a valid pointer.
 */
BinsynthStatus binsynth_record_from_json(const char *json, BinsynthRecord **out_record);

/*
 # Safety
 `record` must be a live handle; `out_json` a valid pointer.
 */
BinsynthStatus binsynth_record_to_json(const BinsynthRecord *record, char **out_json);

/*
 # Safety
 `record` must be a live handle; `out_count` a valid pointer.
 */
BinsynthStatus binsynth_record_source_count(const BinsynthRecord *record, size_t *out_count);

/*
 Generate a caption using each source's event text as its phrase.

 # Safety
 `record` must be a live handle; `out_caption` a valid pointer.
 */
BinsynthStatus binsynth_caption_generate(const BinsynthRecord *record, char **out_caption);

/*
 # Safety
 `record` must be NULL or a handle not yet freed.
 */
void binsynth_record_free(BinsynthRecord *record);

/*
 Sample a scene for a record. The same seed always gives the same scene.

 # Safety
 `record` must be a live handle; `out_scene` a valid pointer.
 */
BinsynthStatus binsynth_scene_sample(const BinsynthRecord *record,
                                     uint64_t seed,
                                     double duration,
                                     uint32_t sample_rate,
                                     BinsynthScene **out_scene);

/*
 # Safety
 `json` must be a NUL-terminated string; `out_scene` a valid pointer.
 */
BinsynthStatus binsynth_scene_from_json(const char *json, BinsynthScene **out_scene);

/*
 # Safety
 `scene` must be a live handle; `out_json` a valid pointer.
 */
BinsynthStatus binsynth_scene_to_json(const BinsynthScene *scene, char **out_json);

/*
 Number of sources and frames per channel of the rendered mix.

 # Safety
 `scene` must be a live handle; the out-pointers valid.
 */
BinsynthStatus binsynth_scene_shape(const BinsynthScene *scene,
                                    size_t *out_sources,
                                    size_t *out_frames);

/*
 Render the scene. `clips` holds `sources` mono clips of `clip_frames`
 samples each, back to back, at the scene's sample rate; clips are
 zero-padded or truncated to the scene length. `left` and `right` must
 each hold `frames` samples as reported by [`binsynth_scene_shape`].

 # Safety
 All pointers must be valid for the stated lengths.
 */
BinsynthStatus binsynth_scene_render(const BinsynthScene *scene,
                                     const double *clips,
                                     size_t clip_frames,
                                     double *left,
                                     double *right,
                                     size_t frames);

/*
 # Safety
 `scene` must be NULL or a handle not yet freed.
 */
void binsynth_scene_free(BinsynthScene *scene);

/*
 Gaussian azimuth matrix with spread `sigma` (in bins).

 # Safety
 `scene` must be a live handle; `out_matrix` a valid pointer.
 */
BinsynthStatus binsynth_matrix_coarse(const BinsynthScene *scene,
                                      double sigma,
                                      BinsynthMatrix **out_matrix);

/*
 One-hot azimuth matrix.

 # Safety
 `scene` must be a live handle; `out_matrix` a valid pointer.
 */
BinsynthStatus binsynth_matrix_fine(const BinsynthScene *scene, BinsynthMatrix **out_matrix);

/*
 Shape as `[sources, azimuth_bins, time_bins]` and a pointer to the
 row-major data, valid while the matrix lives.

 # Safety
 `matrix` must be a live handle; `out_shape` must hold 3 values.
 */
BinsynthStatus binsynth_matrix_data(const BinsynthMatrix *matrix,
                                    size_t *out_shape,
                                    const double **out_data);

/*
 # Safety
 `matrix` must be NULL or a handle not yet freed.
 */
void binsynth_matrix_free(BinsynthMatrix *matrix);

/*
 GCC-PHAT delay of `right` relative to `left` in seconds; positive means
 the left channel lags (source on the right).

 # Safety
 `left` and `right` must each hold `frames` samples.
 */
BinsynthStatus binsynth_gcc_phat(const double *left,
                                 const double *right,
                                 size_t frames,
                                 uint32_t sample_rate,
                                 double max_lag,
                                 double *out_tdoa);

/*
 Fréchet distance between Gaussian fits of two embedding sets, each
 given row-major as `count × dim`.

 # Safety
 `a` must hold `count_a * dim` values and `b` `count_b * dim`.
 */
BinsynthStatus binsynth_frechet_distance(const double *a,
                                         size_t count_a,
                                         const double *b,
                                         size_t count_b,
                                         size_t dim,
                                         double *out_distance);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BINSYNTH_H */
