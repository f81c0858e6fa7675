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

#include "borm/bayes.hpp"
#include "borm/corpus.hpp"
#include "borm/mlp.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace borm {

enum class ModelKind : std::uint8_t { kIom = 0, kBorm = 1, kCborm = 2 };

const char* model_kind_name(ModelKind kind) noexcept;
ModelKind parse_model_kind(const std::string& name);

/// Hidden width of the IOM head.
inline constexpr std::size_t kIomHidden = 32;
/// Hidden widths of the BORM head.
inline constexpr std::size_t kBormHidden1 = 8192;
inline constexpr std::size_t kBormHidden2 = 2048;
/// Hidden width of the CBORM branch that produces F_BORM.
inline constexpr std::size_t kCbormBranchHidden = 2048;
/// Hidden width of the CBORM fusion head.
inline constexpr std::size_t kCbormFusionHidden = 512;

/// Desk-scale replacement for the large hidden widths: max(8 * n_objs^2, 16).
std::size_t scaled_width(std::size_t n_objs);

std::vector<std::size_t> iom_dims(std::size_t n_objs, std::size_t n_scenes);
std::vector<std::size_t> borm_dims(std::size_t n_objs, std::size_t n_scenes, bool scaled = false);

struct CbormDims {
    std::vector<std::size_t> branch;
    std::vector<std::size_t> fusion;
};

/// `scene_dim` defaults to `f_dim` when zero. f_dim must be 512 or 2048.
CbormDims cborm_dims(std::size_t n_objs, std::size_t n_scenes, std::size_t f_dim, std::size_t scene_dim = 0,
                     bool scaled = false);

MlpModel build_iom(std::size_t n_objs, std::size_t n_scenes, std::uint64_t seed);
MlpModel build_borm(std::size_t n_objs, std::size_t n_scenes, std::uint64_t seed, bool scaled = false);

struct CbormModel {
    MlpModel borm_branch;
    MlpModel fusion_head;
};

/// The branch ends in relu when `fborm_relu` is set, so F_BORM is nonnegative.
CbormModel build_cborm(std::size_t n_objs, std::size_t n_scenes, std::size_t f_dim, std::uint64_t seed,
                       std::size_t scene_dim = 0, bool scaled = false, bool fborm_relu = true);

/// Everything needed to rebuild a trained classifier's architecture and to
/// map corpora onto it.
struct ModelSpec {
    ModelKind kind = ModelKind::kIom;
    std::size_t n_objs = 0;
    std::size_t n_scenes = 0;
    std::size_t f_dim = 0;
    std::size_t scene_dim = 0;
    bool scaled = false;
    bool fborm_relu = true;
    std::uint64_t seed = 0;
    std::string stats_ref;
    std::vector<std::string> object_names;
    std::vector<std::string> scene_names;

    void validate() const;
};

/// Builds a freshly initialized network for `spec`.
Network build_network(const ModelSpec& spec);

/// A trained model: its spec, parameters, and (for BORM/CBORM) the
/// statistics its features are computed from.
struct ModelBundle {
    ModelSpec spec;
    Network net;
    std::optional<CooccurrenceStats> stats;
    TrainConfig config;
    std::vector<EpochRecord> history;
    /// Optimizer velocities of the saved parameters, kept so bundles can be resumed.
    std::vector<ParamSet> velocity;
    std::int64_t epoch = 0;
    double best_accuracy = -1.0;
};

/// Feeds corpus records to a network according to a model spec.
class CorpusSource final : public ExampleSource {
public:
    /// Throws MissingSceneFeature for a CBORM spec when any record lacks a
    /// scene feature row. With `cache` set the primary inputs are precomputed.
    CorpusSource(const ModelSpec& spec, const Corpus& corpus, const CooccurrenceStats* stats,
                 const SceneFeatureTable* features, bool cache = false);

    std::size_t size() const override { return corpus_->records.size(); }
    std::size_t label(std::size_t index) const override { return corpus_->records[index].scene; }
    std::size_t primary_dim() const override { return primary_dim_; }
    std::size_t side_dim() const override { return side_dim_; }
    void fill(std::size_t index, std::span<double> primary, std::span<double> side) const override;

private:
    const ModelSpec* spec_;
    const Corpus* corpus_;
    const CooccurrenceStats* stats_;
    std::vector<const std::vector<double>*> side_rows_;
    std::size_t primary_dim_ = 0;
    std::size_t side_dim_ = 0;
    std::vector<double> cache_;
};

struct TrainRequest {
    ModelKind kind = ModelKind::kIom;
    std::size_t f_dim = 512;
    bool scaled = false;
    bool fborm_relu = true;
    double val_fraction = 0.1;
    bool cache_features = true;
    TrainConfig config;
};

/// Splits `corpus` into train/validation, builds the requested architecture
/// and trains it. BORM and CBORM need `stats`; CBORM also needs `features`.
ModelBundle train_model(const Corpus& corpus, const CooccurrenceStats* stats, const SceneFeatureTable* features,
                        const TrainRequest& request);

struct Prediction {
    std::size_t scene = 0;
    std::vector<double> probabilities;
};

/// Argmax of softmax(logits), lowest scene index on ties.
Prediction predict(const ModelBundle& bundle, const ImageRecord& record, const SceneFeatureTable* features);

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);
ModelBundle load_bundle(const std::filesystem::path& dir);

std::string model_spec_to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const std::string& text);

} // namespace borm
