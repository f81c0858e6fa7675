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

#include "borm/borm.h"

#include "borm/bayes.hpp"
#include "borm/corpus.hpp"
#include "borm/error.hpp"
#include "borm/eval.hpp"
#include "borm/features.hpp"
#include "borm/models.hpp"
#include "borm/synth.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct borm_labels {
    std::vector<std::string> names;
};
struct borm_corpus {
    borm::Corpus corpus;
};
struct borm_stats {
    borm::CooccurrenceStats stats;
};
struct borm_features {
    borm::SceneFeatureTable table;
};
struct borm_bundle {
    borm::ModelBundle bundle;
};
struct borm_report {
    borm::EvalReport report;
};

namespace {

using json = nlohmann::json;

thread_local std::string g_last_error;

borm_status fail(borm_status status, const std::string& message) {
    g_last_error = message;
    return status;
}

template <typename Fn>
borm_status guard(Fn&& fn) noexcept {
    try {
        fn();
        return BORM_OK;
    } catch(const borm::Error& e) {
        return fail(static_cast<borm_status>(e.code()), e.what());
    } catch(const std::bad_alloc&) {
        return fail(BORM_E_INTERNAL, "InternalError: out of memory");
    } catch(const std::exception& e) {
        return fail(BORM_E_INTERNAL, std::string("InternalError: ") + e.what());
    } catch(...) {
        return fail(BORM_E_INTERNAL, "InternalError: unknown exception");
    }
}

void require(bool ok, const char* what) {
    if(!ok)
        throw borm::Error(borm::ErrorCode::kInvalidArgument, what);
}

char* dup_string(const std::string& s) {
    char* out = static_cast<char*>(std::malloc(s.size() + 1));
    if(!out)
        throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

borm::FitOptions to_fit(const borm_fit_options* o) {
    borm::FitOptions f;
    if(o) {
        f.uniform_prior = o->uniform_prior != 0;
        f.smoothing = o->smoothing;
        require(o->joint == BORM_JOINT_INDEPENDENT || o->joint == BORM_JOINT_EMPIRICAL, "unknown joint estimator");
        f.joint = static_cast<borm::JointEstimator>(o->joint);
        f.threads = o->threads == 0 ? 1 : o->threads;
    }
    return f;
}

borm::EvalOptions to_eval(const borm_eval_options* o) {
    borm::EvalOptions e;
    if(o) {
        e.skip_missing = o->skip_missing != 0;
        e.threads = o->threads == 0 ? 1 : o->threads;
    }
    return e;
}

json predictions_json(const borm::ModelBundle& b, const borm::Corpus& corpus, const borm::CorpusPredictions& preds) {
    json rows = json::array();
    for(std::size_t k = 0; k < preds.predictions.size(); ++k) {
        const auto& p = preds.predictions[k];
        rows.push_back({{"image_id", corpus.records[preds.record_index[k]].image_id},
                        {"scene", b.spec.scene_names[p.scene]},
                        {"scene_index", p.scene},
                        {"probabilities", p.probabilities}});
    }
    return {{"scenes", b.spec.scene_names}, {"predictions", std::move(rows)}, {"skipped", preds.skipped}};
}

} // namespace

extern "C" {

BORM_API const char* borm_status_name(borm_status status) {
    return borm::error_code_name(static_cast<borm::ErrorCode>(status));
}

BORM_API const char* borm_last_error(void) { return g_last_error.c_str(); }

BORM_API const char* borm_version(void) { return "1.0.0"; }

BORM_API void borm_string_free(char* s) { std::free(s); }

BORM_API borm_status borm_labels_load(const char* path, borm_labels** out) {
    return guard([&] {
        require(path && out, "null argument");
        auto names = borm::read_label_lines(path);
        borm::ObjectVocabulary check(names);
        *out = new borm_labels{std::move(names)};
    });
}

BORM_API size_t borm_labels_size(const borm_labels* labels) { return labels ? labels->names.size() : 0; }

BORM_API const char* borm_labels_name(const borm_labels* labels, size_t index) {
    if(!labels || index >= labels->names.size())
        return nullptr;
    return labels->names[index].c_str();
}

BORM_API void borm_labels_free(borm_labels* labels) { delete labels; }

BORM_API borm_status borm_corpus_load(const char* path, const borm_labels* vocab, const borm_labels* scenes,
                                      borm_corpus** out) {
    return guard([&] {
        require(path && vocab && scenes && out, "null argument");
        *out = new borm_corpus{
            borm::load_corpus(path, borm::ObjectVocabulary(vocab->names), borm::SceneLabelSet(scenes->names))};
    });
}

BORM_API borm_status borm_corpus_save(const borm_corpus* corpus, const char* path) {
    return guard([&] {
        require(corpus && path, "null argument");
        borm::save_corpus(path, corpus->corpus);
    });
}

BORM_API borm_status borm_corpus_save_labels(const borm_corpus* corpus, const char* vocab_path,
                                             const char* scenes_path) {
    return guard([&] {
        require(corpus && vocab_path && scenes_path, "null argument");
        borm::save_labels(vocab_path, corpus->corpus.vocab.names());
        borm::save_labels(scenes_path, corpus->corpus.scenes.names());
    });
}

BORM_API size_t borm_corpus_size(const borm_corpus* corpus) { return corpus ? corpus->corpus.records.size() : 0; }

BORM_API borm_status borm_corpus_split(const borm_corpus* corpus, double val_fraction, uint64_t seed,
                                       borm_corpus** train, borm_corpus** val) {
    return guard([&] {
        require(corpus && train && val, "null argument");
        auto [a, b] = borm::split_corpus(corpus->corpus, val_fraction, seed);
        auto* ta = new borm_corpus{std::move(a)};
        try {
            *val = new borm_corpus{std::move(b)};
        } catch(...) {
            delete ta;
            throw;
        }
        *train = ta;
    });
}

BORM_API void borm_corpus_free(borm_corpus* corpus) { delete corpus; }

BORM_API borm_status borm_synth_generate(const char* spec_json, borm_corpus** out) {
    return guard([&] {
        require(spec_json && out, "null argument");
        *out = new borm_corpus{borm::generate(borm::synth_spec_from_json(spec_json))};
    });
}

BORM_API borm_status borm_synth_pair_signal_spec(uint64_t seed, int test_split, char** spec_json) {
    return guard([&] {
        require(spec_json, "null argument");
        const auto specs = borm::pair_signal_specs(seed);
        *spec_json = dup_string(borm::synth_spec_to_json(test_split ? specs.second : specs.first));
    });
}

BORM_API borm_status borm_synth_pair_signal(uint64_t seed, borm_corpus** train, borm_corpus** test) {
    return guard([&] {
        require(train && test, "null argument");
        auto [a, b] = borm::pair_signal_fixture(seed);
        auto* ta = new borm_corpus{std::move(a)};
        try {
            *test = new borm_corpus{std::move(b)};
        } catch(...) {
            delete ta;
            throw;
        }
        *train = ta;
    });
}

BORM_API void borm_fit_options_default(borm_fit_options* options) {
    if(options)
        *options = borm_fit_options{0, 0.0, BORM_JOINT_INDEPENDENT, 1};
}

BORM_API borm_status borm_stats_fit(const borm_corpus* corpus, const borm_fit_options* options, borm_stats** out) {
    return guard([&] {
        require(corpus && out, "null argument");
        *out = new borm_stats{borm::fit_stats(corpus->corpus, to_fit(options))};
    });
}

BORM_API borm_status borm_stats_save(const borm_stats* stats, const char* path) {
    return guard([&] {
        require(stats && path, "null argument");
        borm::save_stats(stats->stats, path);
    });
}

BORM_API borm_status borm_stats_load(const char* path, borm_stats** out) {
    return guard([&] {
        require(path && out, "null argument");
        *out = new borm_stats{borm::load_stats(path)};
    });
}

BORM_API borm_status borm_stats_to_json(const borm_stats* stats, int include_tensors, char** out) {
    return guard([&] {
        require(stats && out, "null argument");
        *out = dup_string(borm::stats_to_json(stats->stats, include_tensors != 0) + "\n");
    });
}

BORM_API size_t borm_stats_n_objs(const borm_stats* stats) { return stats ? stats->stats.n_objs : 0; }

BORM_API size_t borm_stats_n_scenes(const borm_stats* stats) { return stats ? stats->stats.n_scenes : 0; }

BORM_API const char* borm_stats_object_name(const borm_stats* stats, size_t index) {
    if(!stats || index >= stats->stats.object_names.size())
        return nullptr;
    return stats->stats.object_names[index].c_str();
}

BORM_API const char* borm_stats_scene_name(const borm_stats* stats, size_t index) {
    if(!stats || index >= stats->stats.scene_names.size())
        return nullptr;
    return stats->stats.scene_names[index].c_str();
}

BORM_API borm_status borm_stats_object_index(const borm_stats* stats, const char* name, size_t* index) {
    return guard([&] {
        require(stats && name && index, "null argument");
        const auto& names = stats->stats.object_names;
        const auto it = std::find(names.begin(), names.end(), name);
        if(it == names.end())
            throw borm::Error(borm::ErrorCode::kUnknownLabel, std::string("object '") + name + "'");
        *index = static_cast<size_t>(it - names.begin());
    });
}

BORM_API borm_status borm_stats_posterior(const borm_stats* stats, size_t h, size_t i, double* out, size_t out_len) {
    return guard([&] {
        require(stats && out, "null argument");
        const auto p = borm::posterior(stats->stats, h, i);
        if(out_len < p.size())
            throw borm::Error(borm::ErrorCode::kDimMismatch, "output buffer too small");
        std::copy(p.begin(), p.end(), out);
    });
}

BORM_API borm_status borm_stats_dis(const borm_stats* stats, size_t h, size_t i, double* out) {
    return guard([&] {
        require(stats && out, "null argument");
        *out = borm::discriminative_value(stats->stats, h, i);
    });
}

BORM_API borm_status borm_stats_joint(const borm_stats* stats, size_t h, size_t i, size_t scene, double* out) {
    return guard([&] {
        require(stats && out, "null argument");
        *out = borm::joint_conditional(stats->stats, h, i, scene);
    });
}

BORM_API borm_status borm_stats_top_pairs(const borm_stats* stats, size_t k, char** out) {
    return guard([&] {
        require(stats && out, "null argument");
        const auto& st = stats->stats;
        json rows = json::array();
        for(const auto& p : borm::top_pairs(st, k))
            rows.push_back({{"h", p.h},
                            {"i", p.i},
                            {"objects", {st.object_names[p.h], st.object_names[p.i]}},
                            {"dis", p.dis},
                            {"top_scene", st.scene_names[p.top_scene]},
                            {"top_posterior", st.posterior_at(p.h, p.i)[p.top_scene]}});
        *out = dup_string(rows.dump(2) + "\n");
    });
}

BORM_API borm_status borm_stats_object_profile(const borm_stats* stats, size_t object, char** out) {
    return guard([&] {
        require(stats && out, "null argument");
        const auto& st = stats->stats;
        if(object >= st.n_objs)
            throw borm::Error(borm::ErrorCode::kIndex, "object index out of range");
        json rows = json::array();
        for(std::size_t j = 0; j < st.n_scenes; ++j)
            rows.push_back({{"scene", st.scene_names[j]},
                            {"images", st.image_counts[j]},
                            {"present", st.presence_counts[object * st.n_scenes + j]},
                            {"conditional", st.conditional_at(object, j)}});
        json doc = {{"object", st.object_names[object]},
                    {"self_pair_dis", st.dis_at(object, object)},
                    {"scenes", std::move(rows)}};
        *out = dup_string(doc.dump(2) + "\n");
    });
}

BORM_API borm_status borm_stats_dump_features(const borm_stats* stats, const borm_corpus* corpus, const char* path) {
    return guard([&] {
        require(stats && corpus && path, "null argument");
        borm::write_feature_dump(path, corpus->corpus, stats->stats);
    });
}

BORM_API void borm_stats_free(borm_stats* stats) { delete stats; }

BORM_API borm_status borm_features_load(const char* path, borm_features** out) {
    return guard([&] {
        require(path && out, "null argument");
        *out = new borm_features{borm::load_scene_features(path)};
    });
}

BORM_API size_t borm_features_dim(const borm_features* features) { return features ? features->table.dim() : 0; }

BORM_API void borm_features_free(borm_features* features) { delete features; }

BORM_API void borm_train_options_default(borm_train_options* options) {
    if(!options)
        return;
    const borm::TrainConfig c;
    const borm::TrainRequest r;
    *options = borm_train_options{BORM_MODEL_IOM, r.f_dim,        0,         1,           r.val_fraction,
                                  c.lr0,          c.momentum,     c.weight_decay, c.epochs, c.lr_step,
                                  c.lr_factor,    c.batch_size,   c.seed,    1,           1};
}

BORM_API borm_status borm_train(const borm_corpus* corpus, const borm_stats* stats, const borm_features* features,
                                const borm_train_options* options, borm_bundle** out) {
    return guard([&] {
        require(corpus && options && out, "null argument");
        require(options->kind >= BORM_MODEL_IOM && options->kind <= BORM_MODEL_CBORM, "unknown model kind");
        borm::TrainRequest req;
        req.kind = static_cast<borm::ModelKind>(options->kind);
        req.f_dim = options->f_dim;
        req.scaled = options->scaled != 0;
        req.fborm_relu = options->fborm_relu != 0;
        req.val_fraction = options->val_fraction;
        req.config.lr0 = options->lr;
        req.config.momentum = options->momentum;
        req.config.weight_decay = options->weight_decay;
        req.config.epochs = options->epochs;
        req.config.lr_step = options->lr_step;
        req.config.lr_factor = options->lr_factor;
        req.config.batch_size = options->batch_size;
        req.config.seed = options->seed;
        req.config.best_reload = options->best_reload != 0;
        req.config.threads = options->threads == 0 ? 1 : options->threads;
        *out = new borm_bundle{borm::train_model(corpus->corpus, stats ? &stats->stats : nullptr,
                                                 features ? &features->table : nullptr, req)};
    });
}

BORM_API borm_status borm_bundle_save(const borm_bundle* bundle, const char* dir) {
    return guard([&] {
        require(bundle && dir, "null argument");
        borm::save_bundle(bundle->bundle, dir);
    });
}

BORM_API borm_status borm_bundle_load(const char* dir, borm_bundle** out) {
    return guard([&] {
        require(dir && out, "null argument");
        *out = new borm_bundle{borm::load_bundle(dir)};
    });
}

BORM_API borm_status borm_bundle_summary(const borm_bundle* bundle, char** out) {
    return guard([&] {
        require(bundle && out, "null argument");
        const auto& b = bundle->bundle;
        json history = json::array();
        for(const auto& h : b.history)
            history.push_back(
                {{"epoch", h.epoch}, {"lr", h.lr}, {"train_loss", h.train_loss}, {"val_accuracy", h.val_accuracy}});
        json stages = json::array();
        for(const auto& s : b.net.stages)
            stages.push_back(s.dims());
        json doc = {{"spec", json::parse(borm::model_spec_to_json(b.spec))},
                    {"layer_dims", std::move(stages)},
                    {"best_epoch", b.epoch},
                    {"best_val_accuracy", b.best_accuracy},
                    {"history", std::move(history)}};
        *out = dup_string(doc.dump(2) + "\n");
    });
}

BORM_API borm_status borm_bundle_labels(const borm_bundle* bundle, borm_labels** vocab, borm_labels** scenes) {
    return guard([&] {
        require(bundle && vocab && scenes, "null argument");
        auto* v = new borm_labels{bundle->bundle.spec.object_names};
        try {
            *scenes = new borm_labels{bundle->bundle.spec.scene_names};
        } catch(...) {
            delete v;
            throw;
        }
        *vocab = v;
    });
}

BORM_API void borm_bundle_free(borm_bundle* bundle) { delete bundle; }

BORM_API void borm_eval_options_default(borm_eval_options* options) {
    if(options)
        *options = borm_eval_options{0, 0, 1};
}

BORM_API borm_status borm_evaluate(const borm_bundle* bundle, const borm_corpus* corpus,
                                   const borm_features* features, const borm_eval_options* options,
                                   borm_report** out) {
    return guard([&] {
        require(bundle && corpus && out, "null argument");
        const auto opts = to_eval(options);
        const auto* table = features ? &features->table : nullptr;
        *out = new borm_report{options && options->cross
                                   ? borm::cross_eval(bundle->bundle, corpus->corpus, table, opts)
                                   : borm::evaluate(bundle->bundle, corpus->corpus, table, opts)};
    });
}

BORM_API double borm_report_accuracy(const borm_report* report) {
    return report ? report->report.overall_accuracy : 0.0;
}

BORM_API size_t borm_report_n_records(const borm_report* report) { return report ? report->report.n_records : 0; }

BORM_API borm_status borm_report_render(const borm_report* report, const char* format, char** out) {
    return guard([&] {
        require(report && format && out, "null argument");
        *out = dup_string(borm::render_report(report->report, borm::parse_report_format(format)));
    });
}

BORM_API borm_status borm_report_from_json(const char* text, borm_report** out) {
    return guard([&] {
        require(text && out, "null argument");
        *out = new borm_report{borm::report_from_json(text)};
    });
}

BORM_API void borm_report_free(borm_report* report) { delete report; }

BORM_API borm_status borm_predict_record(const borm_bundle* bundle, const char* record_json,
                                         const borm_features* features, char** out) {
    return guard([&] {
        require(bundle && record_json && out, "null argument");
        const auto& b = bundle->bundle;
        json line;
        try {
            line = json::parse(record_json);
        } catch(const json::exception& e) {
            throw borm::Error(borm::ErrorCode::kParse, std::string("record: ") + e.what());
        }
        // The true scene is irrelevant for prediction; accept records without one.
        if(line.is_object() && !line.contains("scene"))
            line["scene"] = b.spec.scene_names.front();
        const borm::Corpus one = borm::parse_corpus(line.dump(), borm::ObjectVocabulary(b.spec.object_names),
                                                    borm::SceneLabelSet(b.spec.scene_names));
        const auto preds = borm::predict_corpus(b, one, features ? &features->table : nullptr);
        *out = dup_string(predictions_json(b, one, preds).dump(2) + "\n");
    });
}

BORM_API borm_status borm_predict_corpus(const borm_bundle* bundle, const borm_corpus* corpus,
                                         const borm_features* features, const borm_eval_options* options,
                                         char** out) {
    return guard([&] {
        require(bundle && corpus && out, "null argument");
        const auto& b = bundle->bundle;
        const borm::Corpus mapped = (options && options->cross) ? borm::remap_to_bundle(b, corpus->corpus) : [&] {
            if(corpus->corpus.scenes.names() != b.spec.scene_names ||
               corpus->corpus.vocab.names() != b.spec.object_names)
                throw borm::Error(borm::ErrorCode::kLabelSetMismatch,
                                  "corpus object/scene lists differ from the model's (use --cross)");
            return corpus->corpus;
        }();
        const auto preds = borm::predict_corpus(b, mapped, features ? &features->table : nullptr, to_eval(options));
        *out = dup_string(predictions_json(b, mapped, preds).dump(2) + "\n");
    });
}

} // extern "C"
