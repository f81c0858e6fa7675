// This file is part of the borm scene-recognition toolkit.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* Compiles the public header as C and drives a small pipeline through it. */

#include "borm/borm.h"

#include <stdio.h>

#define CHECK_OK(expr)                                                                                               \
    do {                                                                                                             \
        borm_status s_ = (expr);                                                                                     \
        if(s_ != BORM_OK) {                                                                                          \
            fprintf(stderr, "%s: %s (%s)\n", #expr, borm_status_name(s_), borm_last_error());                        \
            return 1;                                                                                                \
        }                                                                                                            \
    } while(0)

int main(int argc, char** argv) {
    char path[4096];
    borm_labels* vocab = NULL;
    borm_labels* scenes = NULL;
    borm_corpus* corpus = NULL;
    borm_stats* stats = NULL;
    borm_fit_options fit;
    double post[3];
    size_t bed = 0, curtain = 0;
    if(argc != 2) {
        fprintf(stderr, "usage: %s DATA_DIR\n", argv[0]);
        return 2;
    }
    snprintf(path, sizeof(path), "%s/toy/vocab.txt", argv[1]);
    CHECK_OK(borm_labels_load(path, &vocab));
    snprintf(path, sizeof(path), "%s/toy/scenes.txt", argv[1]);
    CHECK_OK(borm_labels_load(path, &scenes));
    snprintf(path, sizeof(path), "%s/toy/corpus.jsonl", argv[1]);
    CHECK_OK(borm_corpus_load(path, vocab, scenes, &corpus));
    borm_fit_options_default(&fit);
    CHECK_OK(borm_stats_fit(corpus, &fit, &stats));
    CHECK_OK(borm_stats_object_index(stats, "bed", &bed));
    CHECK_OK(borm_stats_object_index(stats, "curtain", &curtain));
    CHECK_OK(borm_stats_posterior(stats, bed, curtain, post, 3));
    if(post[0] != 1.0) {
        fprintf(stderr, "unexpected posterior %g\n", post[0]);
        return 1;
    }
    borm_stats_free(stats);
    borm_corpus_free(corpus);
    borm_labels_free(scenes);
    borm_labels_free(vocab);
    printf("c api smoke: ok\n");
    return 0;
}
