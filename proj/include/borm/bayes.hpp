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
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace borm {

/// How P(o_h, o_i | c_j) is obtained from the corpus.
enum class JointEstimator : std::uint8_t {
    /// Product of the per-object conditionals (objects assumed independent
    /// given the scene). This is the model's defining estimator.
    kIndependent = 0,
    /// Fraction of scene images in which both objects are present.
    kEmpirical = 1,
};

const char* joint_estimator_name(JointEstimator e) noexcept;
JointEstimator parse_joint_estimator(const std::string& name);

struct FitOptions {
    bool uniform_prior = false;
    /// Additive pseudo-count on presence counts; 0 reproduces raw frequencies.
    double smoothing = 0.0;
    JointEstimator joint = JointEstimator::kIndependent;
    unsigned threads = 1;
};

/// Scene/object co-occurrence statistics fitted on one corpus.
///
/// Layouts are row-major: `conditional[i * S + j]` is P(o_i | c_j),
/// `posterior[(h * N + i) * S + j]` is P(c_j | o_h, o_i), and
/// `dis[h * N + i]` is the population standard deviation of that posterior
/// over scenes. Pairs whose evidence Σ_j P(o_h, o_i | c_j) P(c_j) is zero are
/// marked undefined; their posterior is uniform and their dis is zero.
struct CooccurrenceStats {
    std::size_t n_objs = 0;
    std::size_t n_scenes = 0;
    FitOptions options;
    std::vector<std::string> object_names;
    std::vector<std::string> scene_names;

    std::vector<std::uint64_t> image_counts;    // S
    std::vector<std::uint64_t> presence_counts; // N x S
    std::vector<std::uint64_t> pair_counts;     // N x N x S, empirical estimator only

    std::vector<double> priors;       // S
    std::vector<double> conditional;  // N x S
    std::vector<double> posterior;    // N x N x S
    std::vector<double> dis;          // N x N
    std::vector<std::uint8_t> defined; // N x N

    double conditional_at(std::size_t i, std::size_t j) const { return conditional[i * n_scenes + j]; }
    std::span<const double> posterior_at(std::size_t h, std::size_t i) const {
        return {posterior.data() + (h * n_objs + i) * n_scenes, n_scenes};
    }
    double dis_at(std::size_t h, std::size_t i) const { return dis[h * n_objs + i]; }
    bool defined_at(std::size_t h, std::size_t i) const { return defined[h * n_objs + i] != 0; }

    friend bool operator==(const CooccurrenceStats& a, const CooccurrenceStats& b);
};

CooccurrenceStats fit_stats(const Corpus& corpus, const FitOptions& options = {});

/// P(o_h, o_i | c_j) under the estimator the stats were fitted with.
double joint_conditional(const CooccurrenceStats& stats, std::size_t h, std::size_t i, std::size_t j);

/// P(c | o_h, o_i) as a vector over scenes.
std::vector<double> posterior(const CooccurrenceStats& stats, std::size_t h, std::size_t i);

double discriminative_value(const CooccurrenceStats& stats, std::size_t h, std::size_t i);

struct PairScore {
    std::size_t h = 0;
    std::size_t i = 0;
    double dis = 0.0;
    std::size_t top_scene = 0;

    friend bool operator==(const PairScore&, const PairScore&) = default;
};

/// The k pairs (h <= i) with the largest dis, ties broken by (h, i).
std::vector<PairScore> top_pairs(const CooccurrenceStats& stats, std::size_t k);

std::vector<std::uint8_t> serialize_stats(const CooccurrenceStats& stats);
CooccurrenceStats deserialize_stats(std::span<const std::uint8_t> bytes);
void save_stats(const CooccurrenceStats& stats, const std::filesystem::path& path);
CooccurrenceStats load_stats(const std::filesystem::path& path);

/// Checksum-derived identifier of a stats object, used by model bundles.
std::string stats_id(const CooccurrenceStats& stats);

/// Human-readable export; `include_tensors` adds posterior and dis.
std::string stats_to_json(const CooccurrenceStats& stats, bool include_tensors = true);

} // namespace borm
