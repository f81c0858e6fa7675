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

#include "borm/synth.hpp"

#include "borm/error.hpp"
#include "borm/rng.hpp"

#include <json.hpp>

#include <cstdio>
#include <set>

namespace borm {

using json = nlohmann::json;

namespace {

bool is_probability(double p) { return p >= 0.0 && p <= 1.0; }

std::vector<std::string> default_names(const std::string& stem, std::size_t n) {
    std::vector<std::string> names;
    for(std::size_t k = 0; k < n; ++k)
        names.push_back(stem + std::to_string(k));
    return names;
}

std::string image_id(const std::string& prefix, const std::string& scene, std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%06zu", k);
    return prefix + "_" + scene + "_" + buf;
}

enum class Role : std::uint8_t { kBackground, kCommon, kPaired };

} // namespace

void SynthSpec::validate() const {
    if(n_scenes == 0 || n_objs == 0 || images_per_scene == 0)
        throw Error(ErrorCode::kConfig, "synth spec needs positive n_scenes, n_objs and images_per_scene");
    if(!object_names.empty() && object_names.size() != n_objs)
        throw Error(ErrorCode::kConfig, "object_names length differs from n_objs");
    if(!scene_names.empty() && scene_names.size() != n_scenes)
        throw Error(ErrorCode::kConfig, "scene_names length differs from n_scenes");
    if(!is_probability(background) || !is_probability(marginal))
        throw Error(ErrorCode::kConfig, "background and marginal must be probabilities");
    std::set<std::size_t> common;
    for(const auto& c : common_objects) {
        if(c.object >= n_objs)
            throw Error(ErrorCode::kConfig, "common object index out of range");
        if(!is_probability(c.p))
            throw Error(ErrorCode::kConfig, "common object probability outside [0, 1]");
        if(!common.insert(c.object).second)
            throw Error(ErrorCode::kConfig, "object " + std::to_string(c.object) + " listed twice as common");
    }
    std::vector<std::set<std::size_t>> used(n_scenes);
    for(const auto& p : specific_pairs) {
        if(p.scene >= n_scenes || p.h >= n_objs || p.i >= n_objs)
            throw Error(ErrorCode::kConfig, "specific pair index out of range");
        if(p.h == p.i)
            throw Error(ErrorCode::kConfig, "specific pair needs two distinct objects");
        if(!is_probability(p.p))
            throw Error(ErrorCode::kConfig, "pair probability outside [0, 1]");
        if(!marginal_matched)
            continue;
        if(common.count(p.h) || common.count(p.i))
            throw Error(ErrorCode::kConfig, "a marginal-matched pair object cannot also be a common object");
        if(!used[p.scene].insert(p.h).second || !used[p.scene].insert(p.i).second)
            throw Error(ErrorCode::kConfig, "an object belongs to two pairs in scene " + std::to_string(p.scene));
        if(p.p > marginal || 2.0 * marginal - p.p > 1.0)
            throw Error(ErrorCode::kInfeasibleMarginals,
                        "pair (" + std::to_string(p.h) + ", " + std::to_string(p.i) + ") in scene " +
                            std::to_string(p.scene) + ": q_joint " + std::to_string(p.p) + " with marginal " +
                            std::to_string(marginal));
    }
}

Corpus generate(const SynthSpec& spec) {
    spec.validate();
    Corpus corpus{ObjectVocabulary(spec.object_names.empty() ? default_names("obj", spec.n_objs) : spec.object_names),
                  SceneLabelSet(spec.scene_names.empty() ? default_names("scene", spec.n_scenes) : spec.scene_names),
                  {}};
    std::vector<Role> role(spec.n_objs, Role::kBackground);
    std::vector<double> common_p(spec.n_objs, 0.0);
    for(const auto& c : spec.common_objects) {
        role[c.object] = Role::kCommon;
        common_p[c.object] = c.p;
    }
    if(spec.marginal_matched)
        for(const auto& p : spec.specific_pairs)
            role[p.h] = role[p.i] = Role::kPaired;

    corpus.records.reserve(spec.n_scenes * spec.images_per_scene);
    std::vector<std::uint8_t> present(spec.n_objs);
    std::vector<std::uint8_t> listed(spec.n_objs);
    for(std::size_t s = 0; s < spec.n_scenes; ++s) {
        SplitMix64 g(derive_seed(spec.seed, s));
        std::fill(listed.begin(), listed.end(), 0);
        for(const auto& p : spec.specific_pairs)
            if(p.scene == s)
                listed[p.h] = listed[p.i] = 1;
        for(std::size_t k = 0; k < spec.images_per_scene; ++k) {
            std::fill(present.begin(), present.end(), 0);
            for(std::size_t o = 0; o < spec.n_objs; ++o) {
                if(role[o] == Role::kCommon)
                    present[o] = g.uniform() < common_p[o];
                else if(role[o] == Role::kBackground)
                    present[o] = g.uniform() < spec.background;
            }
            for(const auto& p : spec.specific_pairs) {
                if(p.scene != s)
                    continue;
                const double u = g.uniform();
                if(!spec.marginal_matched) {
                    if(u < p.p)
                        present[p.h] = present[p.i] = 1;
                    continue;
                }
                const double single = spec.marginal - p.p;
                if(u < p.p) {
                    present[p.h] = present[p.i] = 1;
                } else if(u < p.p + single) {
                    present[p.h] = 1;
                } else if(u < p.p + 2.0 * single) {
                    present[p.i] = 1;
                }
            }
            if(spec.marginal_matched)
                for(std::size_t o = 0; o < spec.n_objs; ++o)
                    if(role[o] == Role::kPaired && !listed[o])
                        present[o] = g.uniform() < spec.marginal;
            std::vector<std::size_t> objs;
            for(std::size_t o = 0; o < spec.n_objs; ++o)
                if(present[o])
                    objs.push_back(o);
            corpus.records.push_back(ImageRecord{image_id(spec.id_prefix, corpus.scenes.name(s), k), s, std::move(objs)});
        }
    }
    return corpus;
}

std::string synth_spec_to_json(const SynthSpec& spec) {
    json common = json::array();
    for(const auto& c : spec.common_objects)
        common.push_back({{"object", c.object}, {"p", c.p}});
    json pairs = json::array();
    for(const auto& p : spec.specific_pairs)
        pairs.push_back({{"scene", p.scene}, {"objects", {p.h, p.i}}, {"p", p.p}});
    json j = {{"n_scenes", spec.n_scenes},
              {"n_objs", spec.n_objs},
              {"images_per_scene", spec.images_per_scene},
              {"common_objects", std::move(common)},
              {"specific_pairs", std::move(pairs)},
              {"marginal_matched", spec.marginal_matched},
              {"marginal", spec.marginal},
              {"background", spec.background},
              {"seed", spec.seed},
              {"id_prefix", spec.id_prefix},
              {"object_names", spec.object_names},
              {"scene_names", spec.scene_names}};
    return j.dump(2) + "\n";
}

SynthSpec synth_spec_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        SynthSpec s;
        s.n_scenes = j.at("n_scenes").get<std::size_t>();
        s.n_objs = j.at("n_objs").get<std::size_t>();
        s.images_per_scene = j.at("images_per_scene").get<std::size_t>();
        for(const auto& c : j.value("common_objects", json::array()))
            s.common_objects.push_back({c.at("object").get<std::size_t>(), c.at("p").get<double>()});
        for(const auto& p : j.value("specific_pairs", json::array())) {
            const auto objs = p.at("objects").get<std::vector<std::size_t>>();
            if(objs.size() != 2)
                throw Error(ErrorCode::kConfig, "specific pair needs exactly two objects");
            s.specific_pairs.push_back({p.at("scene").get<std::size_t>(), objs[0], objs[1], p.at("p").get<double>()});
        }
        s.marginal_matched = j.value("marginal_matched", false);
        s.marginal = j.value("marginal", 0.5);
        s.background = j.value("background", 0.05);
        s.seed = j.value("seed", std::uint64_t{0});
        s.id_prefix = j.value("id_prefix", std::string("img"));
        s.object_names = j.value("object_names", std::vector<std::string>{});
        s.scene_names = j.value("scene_names", std::vector<std::string>{});
        return s;
    } catch(const json::exception& e) {
        throw Error(ErrorCode::kParse, std::string("synth spec: ") + e.what());
    }
}

SynthSpec pair_signal_spec(std::uint64_t seed, std::size_t images_per_scene, const std::string& id_prefix) {
    SynthSpec s;
    s.n_scenes = 2;
    s.n_objs = 6;
    s.images_per_scene = images_per_scene;
    s.marginal_matched = true;
    s.marginal = 0.5;
    s.background = 0.05;
    s.seed = seed;
    s.id_prefix = id_prefix;
    s.scene_names = {"paired", "split"};
    for(std::size_t k = 0; k < 3; ++k) {
        s.specific_pairs.push_back({0, 2 * k, 2 * k + 1, 0.5});
        s.specific_pairs.push_back({1, 2 * k, 2 * k + 1, 0.0});
    }
    return s;
}

std::pair<SynthSpec, SynthSpec> pair_signal_specs(std::uint64_t seed) {
    return {pair_signal_spec(seed, kPairSignalTrainPerScene, "train"),
            pair_signal_spec(derive_seed(seed, 0x7e57), kPairSignalTestPerScene, "test")};
}

std::pair<Corpus, Corpus> pair_signal_fixture(std::uint64_t seed) {
    const auto [train, test] = pair_signal_specs(seed);
    return {generate(train), generate(test)};
}

} // namespace borm
