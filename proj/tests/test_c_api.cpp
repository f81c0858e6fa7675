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

#include <doctest.h>

#include <json.hpp>

#include <cstring>
#include <filesystem>
#include <string>

namespace {

const std::string kToy = std::string(BORM_TEST_DATA_DIR) + "/toy/";

std::string take(char* s) {
    std::string out(s);
    borm_string_free(s);
    return out;
}

struct Toy {
    borm_labels* vocab = nullptr;
    borm_labels* scenes = nullptr;
    borm_corpus* corpus = nullptr;
    borm_stats* stats = nullptr;
    Toy() {
        REQUIRE(borm_labels_load((kToy + "vocab.txt").c_str(), &vocab) == BORM_OK);
        REQUIRE(borm_labels_load((kToy + "scenes.txt").c_str(), &scenes) == BORM_OK);
        REQUIRE(borm_corpus_load((kToy + "corpus.jsonl").c_str(), vocab, scenes, &corpus) == BORM_OK);
        borm_fit_options o;
        borm_fit_options_default(&o);
        REQUIRE(borm_stats_fit(corpus, &o, &stats) == BORM_OK);
    }
    ~Toy() {
        borm_stats_free(stats);
        borm_corpus_free(corpus);
        borm_labels_free(scenes);
        borm_labels_free(vocab);
    }
};

borm_train_options quick(borm_model_kind kind) {
    borm_train_options o;
    borm_train_options_default(&o);
    o.kind = kind;
    o.scaled = 1;
    o.val_fraction = 0.25;
    o.epochs = 3;
    o.batch_size = 4;
    return o;
}

} // namespace

TEST_SUITE("c_api") {

TEST_CASE("status names and version") {
    CHECK(std::string(borm_status_name(BORM_OK)) == "Ok");
    CHECK(std::string(borm_status_name(BORM_E_VOCAB_MISMATCH)) == "VocabMismatch");
    CHECK(std::string(borm_status_name(BORM_E_INTERNAL)) == "InternalError");
    CHECK(std::strlen(borm_version()) > 0);
}

TEST_CASE("defaults mirror the training protocol") {
    borm_train_options o;
    borm_train_options_default(&o);
    CHECK(o.lr == 0.01);
    CHECK(o.momentum == 0.9);
    CHECK(o.weight_decay == 1e-4);
    CHECK(o.epochs == 40);
    CHECK(o.lr_step == 10);
    CHECK(o.lr_factor == 0.1);
    CHECK(o.batch_size == 128);
    CHECK(o.best_reload == 1);
    CHECK(o.threads == 1);
}

TEST_CASE("errors map to status codes with a message") {
    borm_labels* l = nullptr;
    CHECK(borm_labels_load("/nonexistent/vocab.txt", &l) == BORM_E_IO);
    CHECK(std::string(borm_last_error()).find("vocab.txt") != std::string::npos);
    CHECK(l == nullptr);
    CHECK(borm_labels_load(nullptr, &l) == BORM_E_INVALID_ARGUMENT);
    borm_corpus* c = nullptr;
    CHECK(borm_synth_generate("{\"n_scenes\":2,\"n_objs\":2,\"images_per_scene\":3,\"marginal_matched\":true,"
                              "\"marginal\":0.5,\"specific_pairs\":[{\"scene\":0,\"objects\":[0,1],\"p\":0.9}]}",
                              &c) == BORM_E_INFEASIBLE_MARGINALS);
    CHECK(borm_synth_generate("not json", &c) != BORM_OK);
}

TEST_CASE("statistics queries") {
    Toy t;
    CHECK(borm_corpus_size(t.corpus) == 12);
    CHECK(borm_stats_n_objs(t.stats) == 5);
    CHECK(borm_stats_n_scenes(t.stats) == 3);
    CHECK(std::string(borm_stats_object_name(t.stats, 1)) == "curtain");
    CHECK(std::string(borm_stats_scene_name(t.stats, 2)) == "office");
    CHECK(borm_stats_scene_name(t.stats, 3) == nullptr);
    size_t bed = 9, curtain = 9;
    REQUIRE(borm_stats_object_index(t.stats, "bed", &bed) == BORM_OK);
    REQUIRE(borm_stats_object_index(t.stats, "curtain", &curtain) == BORM_OK);
    CHECK(borm_stats_object_index(t.stats, "sofa", &bed) == BORM_E_UNKNOWN_LABEL);
    double post[3];
    REQUIRE(borm_stats_posterior(t.stats, bed, curtain, post, 3) == BORM_OK);
    CHECK(post[0] == 1.0);
    CHECK(borm_stats_posterior(t.stats, bed, curtain, post, 2) == BORM_E_DIM_MISMATCH);
    CHECK(borm_stats_posterior(t.stats, bed, 7, post, 3) == BORM_E_INDEX);
    double dis = -1, joint = -1;
    CHECK(borm_stats_dis(t.stats, bed, curtain, &dis) == BORM_OK);
    CHECK(dis == doctest::Approx(std::sqrt(2.0) / 3.0));
    CHECK(borm_stats_joint(t.stats, bed, curtain, 0, &joint) == BORM_OK);
    CHECK(joint == 0.75);
    char* text = nullptr;
    REQUIRE(borm_stats_top_pairs(t.stats, 2, &text) == BORM_OK);
    const auto top = nlohmann::json::parse(take(text));
    CHECK(top.size() == 2);
    CHECK(top[0]["top_scene"] == "bedroom");
    REQUIRE(borm_stats_object_profile(t.stats, bed, &text) == BORM_OK);
    CHECK(nlohmann::json::parse(take(text))["scenes"][0]["conditional"] == 1.0);
    REQUIRE(borm_stats_to_json(t.stats, 0, &text) == BORM_OK);
    CHECK(nlohmann::json::parse(take(text))["n_objs"] == 5);
}

TEST_CASE("stats and corpus files round-trip") {
    Toy t;
    const auto dir = std::filesystem::temp_directory_path() / "borm_test_capi_files";
    std::filesystem::create_directories(dir);
    const std::string path = (dir / "s.bin").string();
    REQUIRE(borm_stats_save(t.stats, path.c_str()) == BORM_OK);
    borm_stats* back = nullptr;
    REQUIRE(borm_stats_load(path.c_str(), &back) == BORM_OK);
    char* a = nullptr;
    char* b = nullptr;
    borm_stats_to_json(t.stats, 1, &a);
    borm_stats_to_json(back, 1, &b);
    CHECK(take(a) == take(b));
    borm_stats_free(back);
    borm_corpus* train = nullptr;
    borm_corpus* val = nullptr;
    REQUIRE(borm_corpus_split(t.corpus, 0.25, 1, &train, &val) == BORM_OK);
    CHECK(borm_corpus_size(train) == 9);
    CHECK(borm_corpus_size(val) == 3);
    borm_corpus_free(train);
    borm_corpus_free(val);
    CHECK(borm_corpus_split(t.corpus, 0.05, 1, &train, &val) == BORM_E_SPLIT_INFEASIBLE);
    REQUIRE(borm_stats_dump_features(t.stats, t.corpus, (dir / "f.bin").string().c_str()) == BORM_OK);
    CHECK(std::filesystem::file_size(dir / "f.bin") > 12 * 25 * 8);
}

TEST_CASE("train, save, load, evaluate and predict") {
    Toy t;
    borm_bundle* bundle = nullptr;
    auto o = quick(BORM_MODEL_BORM);
    REQUIRE(borm_train(t.corpus, t.stats, nullptr, &o, &bundle) == BORM_OK);
    const auto dir = (std::filesystem::temp_directory_path() / "borm_test_capi_bundle").string();
    std::filesystem::remove_all(dir);
    REQUIRE(borm_bundle_save(bundle, dir.c_str()) == BORM_OK);
    borm_bundle* loaded = nullptr;
    REQUIRE(borm_bundle_load(dir.c_str(), &loaded) == BORM_OK);
    char* text = nullptr;
    REQUIRE(borm_bundle_summary(loaded, &text) == BORM_OK);
    const auto summary = nlohmann::json::parse(take(text));
    CHECK(summary["history"].size() == 3);
    CHECK(summary["spec"]["kind"] == "borm");

    borm_eval_options eo;
    borm_eval_options_default(&eo);
    borm_report* r1 = nullptr;
    borm_report* r2 = nullptr;
    REQUIRE(borm_evaluate(bundle, t.corpus, nullptr, &eo, &r1) == BORM_OK);
    REQUIRE(borm_evaluate(loaded, t.corpus, nullptr, &eo, &r2) == BORM_OK);
    CHECK(borm_report_n_records(r1) == 12);
    CHECK(borm_report_accuracy(r1) == borm_report_accuracy(r2));
    char* js = nullptr;
    REQUIRE(borm_report_render(r1, "json", &js) == BORM_OK);
    const std::string rendered = take(js);
    borm_report* r3 = nullptr;
    REQUIRE(borm_report_from_json(rendered.c_str(), &r3) == BORM_OK);
    REQUIRE(borm_report_render(r3, "json", &js) == BORM_OK);
    CHECK(take(js) == rendered);
    CHECK(borm_report_render(r1, "yaml", &js) == BORM_E_CONFIG);

    REQUIRE(borm_predict_record(loaded, R"({"image_id":"q","objects":["bed","curtain"]})", nullptr, &text) ==
            BORM_OK);
    const auto pred = nlohmann::json::parse(take(text));
    CHECK(pred["predictions"][0]["image_id"] == "q");
    CHECK(pred["predictions"][0]["probabilities"].size() == 3);
    CHECK(borm_predict_record(loaded, R"({"image_id":"q","objects":["sofa"]})", nullptr, &text) ==
          BORM_E_UNKNOWN_LABEL);
    REQUIRE(borm_predict_corpus(loaded, t.corpus, nullptr, &eo, &text) == BORM_OK);
    CHECK(nlohmann::json::parse(take(text))["predictions"].size() == 12);

    borm_labels* v = nullptr;
    borm_labels* s = nullptr;
    REQUIRE(borm_bundle_labels(loaded, &v, &s) == BORM_OK);
    CHECK(borm_labels_size(v) == 5);
    CHECK(std::string(borm_labels_name(s, 0)) == "bedroom");
    borm_labels_free(v);
    borm_labels_free(s);

    borm_report_free(r1);
    borm_report_free(r2);
    borm_report_free(r3);
    borm_bundle_free(loaded);
    borm_bundle_free(bundle);
}

TEST_CASE("cross evaluation reports the unmatched object") {
    Toy t;
    borm_bundle* bundle = nullptr;
    auto o = quick(BORM_MODEL_IOM);
    REQUIRE(borm_train(t.corpus, nullptr, nullptr, &o, &bundle) == BORM_OK);
    borm_labels* ov = nullptr;
    REQUIRE(borm_labels_load((kToy + "vocab_other.txt").c_str(), &ov) == BORM_OK);
    borm_corpus* other = nullptr;
    REQUIRE(borm_corpus_load((kToy + "corpus_other.jsonl").c_str(), ov, t.scenes, &other) == BORM_OK);
    borm_eval_options eo;
    borm_eval_options_default(&eo);
    borm_report* r = nullptr;
    CHECK(borm_evaluate(bundle, other, nullptr, &eo, &r) == BORM_E_LABEL_SET_MISMATCH);
    eo.cross = 1;
    CHECK(borm_evaluate(bundle, other, nullptr, &eo, &r) == BORM_E_VOCAB_MISMATCH);
    CHECK(std::string(borm_last_error()).find("rug") != std::string::npos);
    borm_corpus_free(other);
    borm_labels_free(ov);
    borm_bundle_free(bundle);
}

TEST_CASE("model kind checks") {
    Toy t;
    borm_bundle* bundle = nullptr;
    auto o = quick(BORM_MODEL_BORM);
    CHECK(borm_train(t.corpus, nullptr, nullptr, &o, &bundle) == BORM_E_CONFIG);
    o.kind = BORM_MODEL_CBORM;
    CHECK(borm_train(t.corpus, t.stats, nullptr, &o, &bundle) == BORM_E_MISSING_SCENE_FEATURE);
    o.kind = static_cast<borm_model_kind>(7);
    CHECK(borm_train(t.corpus, t.stats, nullptr, &o, &bundle) == BORM_E_INVALID_ARGUMENT);
    CHECK(bundle == nullptr);
}

}
