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
#include "borm/binio.hpp"
#include "borm/error.hpp"
#include "support.hpp"

#include <doctest.h>

#include <json.hpp>

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

std::vector<FitOptions> option_grid() {
    std::vector<FitOptions> out;
    for(bool uniform : {false, true})
        for(double eps : {0.0, 0.5})
            for(auto joint : {JointEstimator::kIndependent, JointEstimator::kEmpirical})
                out.push_back(FitOptions{uniform, eps, joint, 1});
    return out;
}

} // namespace

TEST_SUITE("bayes") {

TEST_CASE("fit matches the brute-force oracle on random corpora") {
    for(std::uint64_t seed = 0; seed < 40; ++seed) {
        const Corpus c = borm_test::random_corpus(seed, 7, 4, 48);
        for(const auto& opt : option_grid()) {
            const auto st = fit_stats(c, opt);
            CHECK(borm_test::oracle_max_error(st, borm_test::oracle_stats(c, opt)) <= 1e-12);
        }
    }
}

TEST_CASE("toy corpus hand values") {
    const auto st = fit_stats(borm_test::toy_corpus());
    // bed appears in 4/4 bedroom images and nowhere else.
    CHECK(st.conditional_at(0, 0) == 1.0);
    CHECK(st.conditional_at(0, 1) == 0.0);
    // curtain: 3/4 bedroom, 0/4 kitchen, 1/4 office.
    CHECK(st.conditional_at(1, 0) == 0.75);
    CHECK(st.conditional_at(1, 2) == 0.25);
    const auto p = posterior(st, 0, 1);
    CHECK(p[0] == 1.0);
    CHECK(p[1] == 0.0);
    CHECK(p[2] == 0.0);
    CHECK(discriminative_value(st, 0, 1) == doctest::Approx(std::sqrt(2.0) / 3.0).epsilon(1e-15));
    CHECK(joint_conditional(st, 0, 1, 0) == 0.75);
    for(double prior : st.priors)
        CHECK(prior == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("posterior normalizes and is symmetric") {
    for(std::uint64_t seed = 100; seed < 130; ++seed) {
        const Corpus c = borm_test::random_corpus(seed, 8, 4, 64);
        for(const auto& opt : option_grid()) {
            const auto st = fit_stats(c, opt);
            for(std::size_t h = 0; h < st.n_objs; ++h)
                for(std::size_t i = 0; i < st.n_objs; ++i) {
                    const auto a = st.posterior_at(h, i);
                    const auto b = st.posterior_at(i, h);
                    double sum = 0.0;
                    for(std::size_t j = 0; j < st.n_scenes; ++j) {
                        sum += a[j];
                        CHECK(a[j] == b[j]);
                    }
                    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
                    CHECK(st.dis_at(h, i) == st.dis_at(i, h));
                    CHECK(st.dis_at(h, i) >= 0.0);
                    CHECK(st.dis_at(h, i) <= 0.5 + 1e-15);
                }
        }
    }
}

TEST_CASE("zero-evidence pairs are uniform with zero dis") {
    // o2 never appears, so every pair with it has no evidence.
    Corpus c{ObjectVocabulary({"o0", "o1", "o2"}), SceneLabelSet({"a", "b", "c"}), {}};
    c.records.push_back(make_record("1", 0, {0}, 3, 3));
    c.records.push_back(make_record("2", 1, {1}, 3, 3));
    c.records.push_back(make_record("3", 2, {0, 1}, 3, 3));
    const auto st = fit_stats(c);
    for(std::size_t h = 0; h < 3; ++h) {
        CHECK_FALSE(st.defined_at(h, 2));
        CHECK(st.dis_at(h, 2) == 0.0);
        for(double p : st.posterior_at(h, 2))
            CHECK(p == 1.0 / 3.0);
    }
    CHECK(st.defined_at(0, 1));
}

TEST_CASE("single-scene corpora have zero dis everywhere") {
    Corpus c{ObjectVocabulary({"x", "y"}), SceneLabelSet({"only"}), {}};
    c.records.push_back(make_record("1", 0, {0, 1}, 2, 1));
    const auto st = fit_stats(c);
    for(double d : st.dis)
        CHECK(d == 0.0);
}

TEST_CASE("empty scenes and bad options are rejected") {
    Corpus c{ObjectVocabulary({"x"}), SceneLabelSet({"a", "b"}), {}};
    c.records.push_back(make_record("1", 0, {0}, 1, 2));
    CHECK(code_of([&] { fit_stats(c); }) == ErrorCode::kEmptyScene);
    const Corpus toy = borm_test::toy_corpus();
    CHECK(code_of([&] { fit_stats(toy, FitOptions{false, -1.0, JointEstimator::kIndependent, 1}); }) ==
          ErrorCode::kConfig);
    const auto st = fit_stats(toy);
    CHECK(code_of([&] { posterior(st, 0, 5); }) == ErrorCode::kIndex);
    CHECK(code_of([&] { discriminative_value(st, 9, 0); }) == ErrorCode::kIndex);
    CHECK(code_of([&] { top_pairs(st, 0); }) == ErrorCode::kInvalidArgument);
    CHECK(code_of([] { parse_joint_estimator("copula"); }) == ErrorCode::kConfig);
}

TEST_CASE("thread count does not change the result") {
    const Corpus c = borm_test::random_corpus(7, 8, 4, 2000);
    for(auto joint : {JointEstimator::kIndependent, JointEstimator::kEmpirical}) {
        const auto one = fit_stats(c, FitOptions{false, 0.0, joint, 1});
        const auto many = fit_stats(c, FitOptions{false, 0.0, joint, 6});
        CHECK(one == many);
    }
}

TEST_CASE("top pairs are sorted by dis with lexicographic ties") {
    const auto st = fit_stats(borm_test::toy_corpus());
    const auto all = top_pairs(st, 100);
    CHECK(all.size() == 15);
    for(std::size_t k = 1; k < all.size(); ++k) {
        const auto& a = all[k - 1];
        const auto& b = all[k];
        CHECK(a.h <= a.i);
        const bool ordered = a.dis > b.dis || (a.dis == b.dis && std::make_pair(a.h, a.i) < std::make_pair(b.h, b.i));
        CHECK(ordered);
    }
    const auto three = top_pairs(st, 3);
    REQUIRE(three.size() == 3);
    CHECK(std::equal(three.begin(), three.end(), all.begin()));
    CHECK(three[0].top_scene == 0);
}

TEST_CASE("stats round-trip bit-exactly") {
    for(const auto& opt : option_grid()) {
        const auto st = fit_stats(borm_test::random_corpus(3, 6, 3, 40), opt);
        const auto bytes = serialize_stats(st);
        const auto back = deserialize_stats(bytes);
        CHECK(back == st);
        CHECK(serialize_stats(back) == bytes);
    }
    const auto st = fit_stats(borm_test::toy_corpus());
    const auto dir = borm_test::scratch_dir("stats_rt");
    save_stats(st, dir / "s.bin");
    CHECK(load_stats(dir / "s.bin") == st);
    CHECK(stats_id(st) == stats_id(load_stats(dir / "s.bin")));
}

TEST_CASE("corrupt and foreign stats files are rejected") {
    const auto bytes = serialize_stats(fit_stats(borm_test::toy_corpus()));
    auto flipped = bytes;
    flipped[bytes.size() / 2] ^= 0x01;
    CHECK(code_of([&] { deserialize_stats(flipped); }) == ErrorCode::kCorruptFile);
    auto version = bytes;
    version[4] = 99;
    CHECK(code_of([&] { deserialize_stats(version); }) == ErrorCode::kUnsupportedVersion);
    auto magic = bytes;
    magic[0] = 'X';
    CHECK(code_of([&] { deserialize_stats(magic); }) == ErrorCode::kCorruptFile);
    const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + 10);
    CHECK(code_of([&] { deserialize_stats(truncated); }) == ErrorCode::kCorruptFile);
}

TEST_CASE("json export carries the tensors") {
    const auto st = fit_stats(borm_test::toy_corpus());
    const auto j = nlohmann::json::parse(stats_to_json(st));
    CHECK(j["n_objs"] == 5);
    CHECK(j["scenes"][0] == "bedroom");
    CHECK(j["dis"][0][1].get<double>() == st.dis_at(0, 1));
    CHECK(j["posterior"][0][1][0].get<double>() == 1.0);
    const auto small = nlohmann::json::parse(stats_to_json(st, false));
    CHECK_FALSE(small.contains("posterior"));
}

}
