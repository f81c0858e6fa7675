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

/* C interface to the borm library. All objects are opaque handles created
 * and destroyed through this API. Every fallible call returns a borm_status;
 * on failure a one-line message is available from borm_last_error() on the
 * calling thread until the next failing call. Strings returned through
 * `char**` out-parameters are owned by the caller and released with
 * borm_string_free(). */

#ifndef BORM_BORM_H
#define BORM_BORM_H

#include <stddef.h>
#include <stdint.h>

#if defined(BORM_BUILDING_LIBRARY)
#define BORM_API __attribute__((visibility("default")))
#else
#define BORM_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum borm_status {
    BORM_OK = 0,
    BORM_E_INVALID_ARGUMENT = 1,
    BORM_E_IO = 2,
    BORM_E_PARSE = 3,
    BORM_E_UNKNOWN_LABEL = 4,
    BORM_E_DUPLICATE_VOCAB_ENTRY = 5,
    BORM_E_EMPTY_VOCABULARY = 6,
    BORM_E_DIM_MISMATCH = 7,
    BORM_E_NON_FINITE = 8,
    BORM_E_SPLIT_INFEASIBLE = 9,
    BORM_E_EMPTY_SCENE = 10,
    BORM_E_INDEX = 11,
    BORM_E_UNSUPPORTED_VERSION = 12,
    BORM_E_CORRUPT_FILE = 13,
    BORM_E_CONFIG = 14,
    BORM_E_EMPTY_TRAIN_SET = 15,
    BORM_E_EMPTY_VAL_SET = 16,
    BORM_E_MISSING_SCENE_FEATURE = 17,
    BORM_E_LABEL_SET_MISMATCH = 18,
    BORM_E_VOCAB_MISMATCH = 19,
    BORM_E_INFEASIBLE_MARGINALS = 20,
    BORM_E_INTERNAL = 21
} borm_status;

typedef struct borm_labels borm_labels;
typedef struct borm_corpus borm_corpus;
typedef struct borm_stats borm_stats;
typedef struct borm_features borm_features;
typedef struct borm_bundle borm_bundle;
typedef struct borm_report borm_report;

BORM_API const char* borm_status_name(borm_status status);
BORM_API const char* borm_last_error(void);
BORM_API const char* borm_version(void);
BORM_API void borm_string_free(char* s);

/* Label lists: one name per line. Used for both object vocabularies and
 * scene label sets. */
BORM_API borm_status borm_labels_load(const char* path, borm_labels** out);
BORM_API size_t borm_labels_size(const borm_labels* labels);
BORM_API const char* borm_labels_name(const borm_labels* labels, size_t index);
BORM_API void borm_labels_free(borm_labels* labels);

/* Corpora (JSONL). The corpus keeps its own copy of both label lists. */
BORM_API borm_status borm_corpus_load(const char* path, const borm_labels* vocab, const borm_labels* scenes,
                                      borm_corpus** out);
BORM_API borm_status borm_corpus_save(const borm_corpus* corpus, const char* path);
BORM_API borm_status borm_corpus_save_labels(const borm_corpus* corpus, const char* vocab_path,
                                             const char* scenes_path);
BORM_API size_t borm_corpus_size(const borm_corpus* corpus);
BORM_API borm_status borm_corpus_split(const borm_corpus* corpus, double val_fraction, uint64_t seed,
                                       borm_corpus** train, borm_corpus** val);
BORM_API void borm_corpus_free(borm_corpus* corpus);

/* Synthetic corpora. `spec_json` is a synth spec document. */
BORM_API borm_status borm_synth_generate(const char* spec_json, borm_corpus** out);
/* Spec of the train (test_split = 0) or test (test_split != 0) draw of the
 * pair-signal fixture for `seed`. */
BORM_API borm_status borm_synth_pair_signal_spec(uint64_t seed, int test_split, char** spec_json);
BORM_API borm_status borm_synth_pair_signal(uint64_t seed, borm_corpus** train, borm_corpus** test);

/* Co-occurrence statistics. */
typedef enum borm_joint { BORM_JOINT_INDEPENDENT = 0, BORM_JOINT_EMPIRICAL = 1 } borm_joint;

typedef struct borm_fit_options {
    int uniform_prior;
    double smoothing;
    borm_joint joint;
    unsigned threads;
} borm_fit_options;

BORM_API void borm_fit_options_default(borm_fit_options* options);
BORM_API borm_status borm_stats_fit(const borm_corpus* corpus, const borm_fit_options* options, borm_stats** out);
BORM_API borm_status borm_stats_save(const borm_stats* stats, const char* path);
BORM_API borm_status borm_stats_load(const char* path, borm_stats** out);
BORM_API borm_status borm_stats_to_json(const borm_stats* stats, int include_tensors, char** json);
BORM_API size_t borm_stats_n_objs(const borm_stats* stats);
BORM_API size_t borm_stats_n_scenes(const borm_stats* stats);
BORM_API const char* borm_stats_object_name(const borm_stats* stats, size_t index);
BORM_API const char* borm_stats_scene_name(const borm_stats* stats, size_t index);
BORM_API borm_status borm_stats_object_index(const borm_stats* stats, const char* name, size_t* index);
/* `out` must hold borm_stats_n_scenes() values. */
BORM_API borm_status borm_stats_posterior(const borm_stats* stats, size_t h, size_t i, double* out, size_t out_len);
BORM_API borm_status borm_stats_dis(const borm_stats* stats, size_t h, size_t i, double* out);
BORM_API borm_status borm_stats_joint(const borm_stats* stats, size_t h, size_t i, size_t scene, double* out);
/* JSON array of {h, i, objects, dis, top_scene, top_posterior}. */
BORM_API borm_status borm_stats_top_pairs(const borm_stats* stats, size_t k, char** json);
/* Conditional P(object | scene) for every scene as a JSON document. */
BORM_API borm_status borm_stats_object_profile(const borm_stats* stats, size_t object, char** json);
/* Writes the BORM features of every record in `corpus` as a feature dump. */
BORM_API borm_status borm_stats_dump_features(const borm_stats* stats, const borm_corpus* corpus, const char* path);
BORM_API void borm_stats_free(borm_stats* stats);

/* Precomputed scene features (JSONL). */
BORM_API borm_status borm_features_load(const char* path, borm_features** out);
BORM_API size_t borm_features_dim(const borm_features* features);
BORM_API void borm_features_free(borm_features* features);

/* Training. */
typedef enum borm_model_kind { BORM_MODEL_IOM = 0, BORM_MODEL_BORM = 1, BORM_MODEL_CBORM = 2 } borm_model_kind;

typedef struct borm_train_options {
    borm_model_kind kind;
    size_t f_dim;
    int scaled;
    int fborm_relu;
    double val_fraction;
    double lr;
    double momentum;
    double weight_decay;
    size_t epochs;
    size_t lr_step;
    double lr_factor;
    size_t batch_size;
    uint64_t seed;
    int best_reload;
    unsigned threads;
} borm_train_options;

BORM_API void borm_train_options_default(borm_train_options* options);
/* `stats` may be NULL for IOM; `features` may be NULL unless kind is CBORM. */
BORM_API borm_status borm_train(const borm_corpus* corpus, const borm_stats* stats, const borm_features* features,
                                const borm_train_options* options, borm_bundle** out);
BORM_API borm_status borm_bundle_save(const borm_bundle* bundle, const char* dir);
BORM_API borm_status borm_bundle_load(const char* dir, borm_bundle** out);
/* Spec, train config and per-epoch history as JSON. */
BORM_API borm_status borm_bundle_summary(const borm_bundle* bundle, char** json);
/* Copies of the bundle's object vocabulary and scene label set. */
BORM_API borm_status borm_bundle_labels(const borm_bundle* bundle, borm_labels** vocab, borm_labels** scenes);
BORM_API void borm_bundle_free(borm_bundle* bundle);

/* Evaluation. `cross` re-maps the corpus onto the bundle's labels by name. */
typedef struct borm_eval_options {
    int cross;
    int skip_missing;
    unsigned threads;
} borm_eval_options;

BORM_API void borm_eval_options_default(borm_eval_options* options);
BORM_API borm_status borm_evaluate(const borm_bundle* bundle, const borm_corpus* corpus,
                                   const borm_features* features, const borm_eval_options* options,
                                   borm_report** out);
BORM_API double borm_report_accuracy(const borm_report* report);
BORM_API size_t borm_report_n_records(const borm_report* report);
/* format: "text", "json" or "csv". */
BORM_API borm_status borm_report_render(const borm_report* report, const char* format, char** out);
BORM_API borm_status borm_report_from_json(const char* json, borm_report** out);
BORM_API void borm_report_free(borm_report* report);

/* Per-image predictions. `record_json` is one corpus JSONL line; use
 * borm_predict_corpus for whole corpora. Output is a JSON object with the
 * bundle's `scenes`, a `predictions` array of
 * {image_id, scene, scene_index, probabilities} and the `skipped` ids. */
BORM_API borm_status borm_predict_record(const borm_bundle* bundle, const char* record_json,
                                         const borm_features* features, char** json);
BORM_API borm_status borm_predict_corpus(const borm_bundle* bundle, const borm_corpus* corpus,
                                         const borm_features* features, const borm_eval_options* options,
                                         char** json);

#ifdef __cplusplus
}
#endif

#endif /* BORM_BORM_H */
