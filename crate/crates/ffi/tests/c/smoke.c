#include <math.h>
#include <stdio.h>
#include <stdlib.h>

#include "binsynth.h"

#define CHECK(call)                                                              \
    do {                                                                         \
        BinsynthStatus s_ = (call);                                              \
        if (s_ != BINSYNTH_STATUS_OK) {                                          \
            fprintf(stderr, "%s -> %d: %s\n", #call, (int)s_, binsynth_last_error()); \
            return 1;                                                            \
        }                                                                        \
    } while (0)

int main(void) {
    BinsynthRecord *rec = NULL;
    CHECK(binsynth_caption_parse("Outdoors, a dog barks on the right.", &rec));
    size_t n = 0;
    CHECK(binsynth_record_source_count(rec, &n));
    if (n != 1) return 2;

    char *caption = NULL;
    CHECK(binsynth_caption_generate(rec, &caption));
    printf("caption: %s\n", caption);
    binsynth_string_free(caption);

    BinsynthScene *scene = NULL;
    CHECK(binsynth_scene_sample(rec, 7, 1.0, 16000, &scene));
    size_t sources = 0, frames = 0;
    CHECK(binsynth_scene_shape(scene, &sources, &frames));

    double *clip = malloc(sizeof(double) * frames);
    double *left = malloc(sizeof(double) * frames);
    double *right = malloc(sizeof(double) * frames);
    srand(1);
    for (size_t i = 0; i < frames; i++) clip[i] = (double)rand() / RAND_MAX - 0.5;
    CHECK(binsynth_scene_render(scene, clip, frames, left, right, frames));

    double tdoa = 0.0;
    CHECK(binsynth_gcc_phat(left, right, frames, 16000, 0.001, &tdoa));
    printf("tdoa_us: %.2f\n", tdoa * 1e6);
    if (!(tdoa > 0.0)) return 3;

    BinsynthMatrix *fine = NULL;
    CHECK(binsynth_matrix_fine(scene, &fine));
    size_t shape[3];
    const double *data = NULL;
    CHECK(binsynth_matrix_data(fine, shape, &data));
    printf("shape: %zu %zu %zu\n", shape[0], shape[1], shape[2]);

    if (binsynth_caption_parse(NULL, &rec) != BINSYNTH_STATUS_NULL_POINTER) return 4;
    if (binsynth_last_error() == NULL) return 5;

    binsynth_matrix_free(fine);
    binsynth_scene_free(scene);
    binsynth_record_free(rec);
    free(clip);
    free(left);
    free(right);
    printf("ok %s\n", binsynth_version());
    return 0;
}
