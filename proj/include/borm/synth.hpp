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

#pragma once

#include "borm/corpus.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace borm {

struct CommonObject {
    std::size_t object = 0;
    double p = 0.0;
};

struct SpecificPair {
    std::size_t scene = 0;
    std::size_t h = 0;
    std::size_t i = 0;
    /// Joint appearance probability in `scene`.
    double p = 0.0;
};

/// Generative description of a synthetic object-occurrence corpus.
///
/// Common objects appear with their own probability in every scene. Objects
/// not mentioned anywhere appear independently with `background`.
///
/// Without marginal matching, a specific pair is added jointly with
/// probability p on top of background noise. With marginal matching every
/// object that belongs to any pair has marginal `marginal` (m) in every
/// scene: in a scene that lists its pair with joint probability q the pair is
/// drawn as {both: q, h only: m-q, i only: m-q, neither: 1-2m+q}, and in
/// other scenes the object appears independently with probability m.
struct SynthSpec {
    std::size_t n_scenes = 0;
    std::size_t n_objs = 0;
    std::size_t images_per_scene = 0;
    std::vector<CommonObject> common_objects;
    std::vector<SpecificPair> specific_pairs;
    bool marginal_matched = false;
    double marginal = 0.5;
    double background = 0.05;
    std::uint64_t seed = 0;
    std::string id_prefix = "img";
    /// Optional; defaults to obj0.. / scene0...
    std::vector<std::string> object_names;
    std::vector<std::string> scene_names;

    /// ConfigError for malformed specs, InfeasibleMarginals when a matched
    /// pair has q > m or 2m - q > 1.
    void validate() const;
};

/// Pure function of the spec: same spec, same corpus.
Corpus generate(const SynthSpec& spec);

std::string synth_spec_to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const std::string& text);

/// Constants of the pair-signal fixture: 2 scenes, 6 objects in three pairs
/// (0,1), (2,3), (4,5), marginal 0.5 for every object in both scenes. In
/// scene 0 each pair appears together or not at all (q = 0.5); in scene 1
/// exactly one object of each pair appears (q = 0).
inline constexpr std::size_t kPairSignalTrainPerScene = 2000;
inline constexpr std::size_t kPairSignalTestPerScene = 500;

SynthSpec pair_signal_spec(std::uint64_t seed, std::size_t images_per_scene, const std::string& id_prefix);

/// Specs of the (train, test) pair-signal draws; the test seed is derived
/// from `seed`.
std::pair<SynthSpec, SynthSpec> pair_signal_specs(std::uint64_t seed);

/// (train, test) draws of the pair-signal spec with independent seeds.
std::pair<Corpus, Corpus> pair_signal_fixture(std::uint64_t seed);

} // namespace borm
