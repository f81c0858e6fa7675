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

#include "borm/bayes.hpp"
#include "borm/error.hpp"
#include "borm/features.hpp"
#include "borm/models.hpp"
#include "borm/synth.hpp"
#include "support.hpp"

#include <doctest.h>

#include <fstream>

using namespace borm;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch(const Error& e) {
        return e.code();
    }
    return ErrorCode::kOk;
}

SceneFeatureTable toy_scene_features(const Corpus& c, std::size_t dim) {
    std::unordered_map<std::string, std::vector<double>> rows;
    for(std::size_t k = 0; k < c.records.size(); ++k) {
        std::vector<double> v(dim);
        for(std::size_t d = 0; d < dim; ++d)
            v[d] = std::sin(0.37 * double(k * dim + d)) + (d % 3 == c.records[k].scene ? 1.0 : 0.0);
        rows.emplace(c.records[k].image_id, std::move(v));
    }
    return SceneFeatureTable(dim, std::move(rows));
}

TrainRequest quick_request(ModelKind kind) {
    TrainRequest r;
    r.kind = kind;
    r.scaled = true;
    r.val_fraction = 0.25;
    r.config.epochs = 4;
    r.config.lr_step = 2;
    r.config.batch_size = 4;
    r.config.seed = 5;
    return r;
}

std::vector<std::uint8_t> file_bytes(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

} // namespace

TEST_SUITE("models") {

TEST_CASE("architecture dimensions") {
    CHECK(iom_dims(150, 7) == std::vector<std::size_t>{150, 32, 7});
    CHECK(borm_dims(150, 7) == std::vector<std::size_t>{22500, 8192, 2048, 7});
    CHECK(borm_dims(5, 3, true) == std::vector<std::size_t>{25, 200, 200, 3});
    CHECK(borm_dims(1, 2, true) == std::vector<std::size_t>{1, 16, 16, 2});
    const auto c = cborm_dims(150, 7, 512);
    CHECK(c.branch == std::vector<std::size_t>{22500, 2048, 512});
    CHECK(c.fusion == std::vector<std::size_t>{1024, 512, 7});
    const auto c2 = cborm_dims(150, 7, 2048, 512);
    CHECK(c2.fusion == std::vector<std::size_t>{2560, 512, 7});
    CHECK(code_of([] { cborm_dims(150, 7, 300); }) == ErrorCode::kConfig);
    CHECK(code_of([] { iom_dims(0, 7); }) == ErrorCode::kConfig);
    CHECK(build_iom(5, 3, 0).dims() == iom_dims(5, 3));
    const auto m = build_cborm(4, 3, 512, 1, 2048, true);
    CHECK(m.borm_branch.dims() == std::vector<std::size_t>{16, 128, 512});
    CHECK(m.borm_branch.layers.back().activation == Activation::kRelu);
    CHECK(m.fusion_head.dims() == std::vector<std::size_t>{2560, 512, 3});
    CHECK(build_cborm(4, 3, 512, 1, 512, true, false).borm_branch.layers.back().activation == Activation::kNone);
}

TEST_CASE("model kind names") {
    for(auto k : {ModelKind::kIom, ModelKind::kBorm, ModelKind::kCborm})
        CHECK(parse_model_kind(model_kind_name(k)) == k);
    CHECK(code_of([] { parse_model_kind("resnet"); }) == ErrorCode::kConfig);
}

TEST_CASE("corpus source yields IOM and BORM inputs") {
    const Corpus c = borm_test::toy_corpus();
    const auto st = fit_stats(c);
    ModelSpec spec;
    spec.kind = ModelKind::kBorm;
    spec.n_objs = 5;
    spec.n_scenes = 3;
    spec.stats_ref = stats_id(st);
    spec.object_names = c.vocab.names();
    spec.scene_names = c.scenes.names();
    for(bool cache : {false, true}) {
        const CorpusSource src(spec, c, &st, nullptr, cache);
        CHECK(src.primary_dim() == 25);
        std::vector<double> row(25);
        src.fill(1, row, {});
        std::vector<double> want(25);
        borm_feature_into(c.records[1], st, want);
        CHECK(row == want);
        CHECK(src.label(5) == 1);
    }
    spec.kind = ModelKind::kIom;
    spec.stats_ref.clear();
    const CorpusSource iom(spec, c, nullptr, nullptr);
    std::vector<double> row(5);
    iom.fill(0, row, {});
    CHECK(row == std::vector<double>{1, 1, 0, 1, 1});
}

TEST_CASE("train_model argument checks") {
    const Corpus c = borm_test::toy_corpus();
    const auto st = fit_stats(c);
    CHECK(code_of([&] { train_model(c, &st, nullptr, quick_request(ModelKind::kIom)); }) == ErrorCode::kConfig);
    CHECK(code_of([&] { train_model(c, nullptr, nullptr, quick_request(ModelKind::kBorm)); }) == ErrorCode::kConfig);
    CHECK(code_of([&] { train_model(c, &st, nullptr, quick_request(ModelKind::kCborm)); }) ==
          ErrorCode::kMissingSceneFeature);
    const auto other = fit_stats(borm_test::random_corpus(1, 5, 3, 20));
    CHECK(code_of([&] { train_model(c, &other, nullptr, quick_request(ModelKind::kBorm)); }) ==
          ErrorCode::kVocabMismatch);
    const auto narrow = toy_scene_features(c, 4);
    CHECK(code_of([&] { train_model(c, &st, &narrow, quick_request(ModelKind::kCborm)); }) == ErrorCode::kConfig);
    auto missing_rows = toy_scene_features(borm_test::random_corpus(2, 5, 3, 5), 512);
    CHECK(code_of([&] { train_model(c, &st, &missing_rows, quick_request(ModelKind::kCborm)); }) ==
          ErrorCode::kMissingSceneFeature);
}

TEST_CASE("bundles of every kind round-trip bit-exactly") {
    const Corpus c = borm_test::toy_corpus();
    const auto st = fit_stats(c);
    const auto feats = toy_scene_features(c, 512);
    for(auto kind : {ModelKind::kIom, ModelKind::kBorm, ModelKind::kCborm}) {
        CAPTURE(model_kind_name(kind));
        const auto b = train_model(c, kind == ModelKind::kIom ? nullptr : &st, &feats, quick_request(kind));
        CHECK(b.history.size() == 4);
        const auto dir = borm_test::scratch_dir(std::string("bundle_") + model_kind_name(kind));
        save_bundle(b, dir / "a");
        const auto back = load_bundle(dir / "a");
        save_bundle(back, dir / "b");
        for(const auto& entry : std::filesystem::directory_iterator(dir / "a"))
            CHECK(file_bytes(entry.path()) == file_bytes(dir / "b" / entry.path().filename()));
        CHECK(back.spec.object_names == c.vocab.names());
        for(const auto& r : c.records) {
            const auto p = predict(b, r, &feats);
            const auto q = predict(back, r, &feats);
            CHECK(p.scene == q.scene);
            CHECK(p.probabilities == q.probabilities);
            double sum = 0.0;
            for(double v : p.probabilities)
                sum += v;
            CHECK(sum == doctest::Approx(1.0));
        }
    }
}

TEST_CASE("training is reproducible from the seed") {
    const Corpus c = borm_test::toy_corpus();
    const auto st = fit_stats(c);
    const auto a = train_model(c, &st, nullptr, quick_request(ModelKind::kBorm));
    const auto b = train_model(c, &st, nullptr, quick_request(ModelKind::kBorm));
    const auto dir = borm_test::scratch_dir("repro");
    save_bundle(a, dir / "a");
    save_bundle(b, dir / "b");
    for(const auto& name : {"spec.json", "head.bmlp", "stats.bin"})
        CHECK(file_bytes(dir / "a" / name) == file_bytes(dir / "b" / name));
}

TEST_CASE("damaged bundles are rejected") {
    const Corpus c = borm_test::toy_corpus();
    const auto st = fit_stats(c);
    const auto b = train_model(c, &st, nullptr, quick_request(ModelKind::kBorm));
    const auto dir = borm_test::scratch_dir("damaged");
    save_bundle(b, dir / "x");
    // Stats that do not match the recorded reference.
    save_stats(fit_stats(c, FitOptions{true, 0.0, JointEstimator::kIndependent, 1}), dir / "x" / "stats.bin");
    CHECK(code_of([&] { load_bundle(dir / "x"); }) == ErrorCode::kCorruptFile);
    save_bundle(b, dir / "y");
    auto bytes = file_bytes(dir / "y" / "head.bmlp");
    bytes[bytes.size() / 2] ^= 1;
    std::ofstream(dir / "y" / "head.bmlp", std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                                   static_cast<std::streamsize>(bytes.size()));
    CHECK(code_of([&] { load_bundle(dir / "y"); }) == ErrorCode::kCorruptFile);
    CHECK(code_of([&] { load_bundle(dir / "nothing"); }) == ErrorCode::kIo);
}

TEST_CASE("model spec json round-trip") {
    ModelSpec s;
    s.kind = ModelKind::kCborm;
    s.n_objs = 2;
    s.n_scenes = 2;
    s.f_dim = 2048;
    s.scene_dim = 512;
    s.seed = 99;
    s.stats_ref = "abc";
    s.object_names = {"a", "b"};
    s.scene_names = {"x", "y"};
    const auto back = model_spec_from_json(model_spec_to_json(s));
    CHECK(model_spec_to_json(back) == model_spec_to_json(s));
    CHECK(code_of([] { model_spec_from_json("{}"); }) == ErrorCode::kParse);
}

}
