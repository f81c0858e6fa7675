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

#include "borm/corpus.hpp"
#include "borm/error.hpp"
#include "support.hpp"

#include <doctest.h>

#include <fstream>

using namespace borm;
using borm_test::data_dir;
using borm_test::scratch_dir;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch(const Error& e) {
        return e.code();
    }
    return ErrorCode::kOk;
}

ObjectVocabulary toy_vocab() { return load_vocab(data_dir() / "toy" / "vocab.txt"); }
SceneLabelSet toy_scenes() { return load_scene_labels(data_dir() / "toy" / "scenes.txt"); }

} // namespace

TEST_SUITE("corpus") {

TEST_CASE("label sets index names and reject bad lists") {
    const ObjectVocabulary v({"bed", "lamp"});
    CHECK(v.size() == 2);
    CHECK(v.find("lamp") == std::optional<std::size_t>(1));
    CHECK_FALSE(v.find("sofa").has_value());
    CHECK(code_of([] { ObjectVocabulary(std::vector<std::string>{}); }) == ErrorCode::kEmptyVocabulary);
    CHECK(code_of([] { ObjectVocabulary({"a", "b", "a"}); }) == ErrorCode::kDuplicateVocabEntry);
    CHECK(code_of([] { SceneLabelSet({"x", "x"}); }) == ErrorCode::kDuplicateVocabEntry);
}

TEST_CASE("toy fixture loads with expected counts") {
    const Corpus c = borm_test::toy_corpus();
    CHECK(c.n_objs() == 5);
    CHECK(c.n_scenes() == 3);
    CHECK(c.records.size() == 12);
    CHECK(c.scene_counts() == std::vector<std::size_t>{4, 4, 4});
    CHECK(c.records[0].image_id == "bedroom_1");
    CHECK(c.records[0].objects == std::vector<std::size_t>{0, 1, 3, 4});
}

TEST_CASE("records are deduplicated and sorted") {
    const Corpus c = parse_corpus(R"({"image_id":"a","scene":"kitchen","objects":["wall","bed","wall"]})",
                                  toy_vocab(), toy_scenes());
    REQUIRE(c.records.size() == 1);
    CHECK(c.records[0].objects == std::vector<std::size_t>{0, 3});
    CHECK(c.records[0].scene == 1);
}

TEST_CASE("integer object tokens are accepted") {
    const Corpus c =
        parse_corpus(R"({"image_id":"a","scene":"office","objects":[4,0]})", toy_vocab(), toy_scenes());
    CHECK(c.records[0].objects == std::vector<std::size_t>{0, 4});
}

TEST_CASE("unknown labels and malformed lines are rejected") {
    const auto v = toy_vocab();
    const auto s = toy_scenes();
    CHECK(code_of([&] { parse_corpus(R"({"image_id":"a","scene":"kitchen","objects":["sofa"]})", v, s); }) ==
          ErrorCode::kUnknownLabel);
    CHECK(code_of([&] { parse_corpus(R"({"image_id":"a","scene":"garage","objects":[]})", v, s); }) ==
          ErrorCode::kUnknownLabel);
    CHECK(code_of([&] { parse_corpus(R"({"image_id":"a","scene":"kitchen","objects":[9]})", v, s); }) ==
          ErrorCode::kUnknownLabel);
    CHECK(code_of([&] { parse_corpus("{not json", v, s); }) == ErrorCode::kParse);
    CHECK(code_of([&] { parse_corpus(R"({"scene":"kitchen","objects":[]})", v, s); }) == ErrorCode::kParse);
}

TEST_CASE("unknown label error names the line") {
    try {
        parse_corpus("\n" R"({"image_id":"a","scene":"kitchen","objects":["sofa"]})", toy_vocab(), toy_scenes());
        FAIL("expected an error");
    } catch(const Error& e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        CHECK(std::string(e.what()).find("sofa") != std::string::npos);
    }
}

TEST_CASE("corpus round-trips through JSONL") {
    const Corpus c = borm_test::toy_corpus();
    const Corpus back = parse_corpus(corpus_to_jsonl(c), c.vocab, c.scenes);
    CHECK(back == c);
    const auto dir = scratch_dir("corpus_rt");
    save_corpus(dir / "c.jsonl", c);
    CHECK(load_corpus(dir / "c.jsonl", c.vocab, c.scenes) == c);
}

TEST_CASE("label files round-trip") {
    const auto dir = scratch_dir("labels_rt");
    save_labels(dir / "v.txt", {"a", "b c", "d"});
    CHECK(read_label_lines(dir / "v.txt") == std::vector<std::string>{"a", "b c", "d"});
    CHECK(code_of([&] { load_vocab(dir / "missing.txt"); }) == ErrorCode::kIo);
}

TEST_CASE("scene features load and validate") {
    const auto t = load_scene_features(data_dir() / "toy" / "scene_features.jsonl");
    CHECK(t.dim() == 4);
    CHECK(t.size() == 12);
    REQUIRE(t.find("office_4") != nullptr);
    CHECK(t.find("nope") == nullptr);
    CHECK(code_of([] { parse_scene_features(R"({"image_id":"a","feature":[1,2]})"
                                            "\n"
                                            R"({"image_id":"b","feature":[1]})"); }) == ErrorCode::kDimMismatch);
    CHECK(code_of([] { parse_scene_features(R"({"image_id":"a","feature":[1]})"
                                            "\n"
                                            R"({"image_id":"a","feature":[2]})"); }) == ErrorCode::kParse);
    CHECK(code_of([] { parse_scene_features(R"({"image_id":"a","feature":[1e999]})"); }) != ErrorCode::kOk);
}

TEST_CASE("split is stratified, disjoint, deterministic and order preserving") {
    const Corpus c = borm_test::random_corpus(11, 6, 3, 200);
    const auto [train, val] = split_corpus(c, 0.25, 5);
    CHECK(train.records.size() + val.records.size() == c.records.size());
    const auto counts = c.scene_counts();
    const auto vcounts = val.scene_counts();
    for(std::size_t j = 0; j < counts.size(); ++j) {
        const auto expected = std::min<std::size_t>(std::llround(0.25 * double(counts[j])), counts[j] - 1);
        CHECK(vcounts[j] == expected);
    }
    std::vector<std::string> ids;
    for(const auto& r : train.records)
        ids.push_back(r.image_id);
    for(const auto& r : val.records)
        CHECK(std::find(ids.begin(), ids.end(), r.image_id) == ids.end());
    auto position = [&](const std::string& id) {
        for(std::size_t k = 0; k < c.records.size(); ++k)
            if(c.records[k].image_id == id)
                return k;
        return c.records.size();
    };
    for(std::size_t k = 1; k < train.records.size(); ++k)
        CHECK(position(train.records[k - 1].image_id) < position(train.records[k].image_id));
    const auto again = split_corpus(c, 0.25, 5);
    CHECK(again.first == train);
    CHECK(again.second == val);
    const auto other = split_corpus(c, 0.25, 6);
    CHECK_FALSE(other.second == val);
}

TEST_CASE("split edge cases") {
    const Corpus c = borm_test::toy_corpus();
    const auto [all, none] = split_corpus(c, 0.0, 0);
    CHECK(all == c);
    CHECK(none.records.empty());
    CHECK(code_of([&] { split_corpus(c, 0.1, 0); }) == ErrorCode::kSplitInfeasible);
    CHECK(code_of([&] { split_corpus(c, 1.0, 0); }) == ErrorCode::kInvalidArgument);
    const auto [tr, va] = split_corpus(c, 0.5, 0);
    CHECK(va.scene_counts() == std::vector<std::size_t>{2, 2, 2});
}

}
