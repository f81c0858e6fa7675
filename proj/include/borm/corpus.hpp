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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace borm {

/// Ordered, duplicate-free list of category names with dense indices.
/// The tag keeps object vocabularies and scene label sets from being mixed up.
template <typename Tag>
class LabelSet {
public:
    LabelSet() = default;
    explicit LabelSet(std::vector<std::string> names);

    std::size_t size() const noexcept { return names_.size(); }
    bool empty() const noexcept { return names_.empty(); }
    const std::string& name(std::size_t index) const { return names_.at(index); }
    const std::vector<std::string>& names() const noexcept { return names_; }
    std::optional<std::size_t> find(std::string_view name) const;

    friend bool operator==(const LabelSet& a, const LabelSet& b) { return a.names_ == b.names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::size_t> index_;
};

struct ObjectTag {};
struct SceneTag {};
using ObjectVocabulary = LabelSet<ObjectTag>;
using SceneLabelSet = LabelSet<SceneTag>;

/// One image: its scene and the set of object categories detected in it.
/// Presence only; `objects` is sorted and duplicate-free.
struct ImageRecord {
    std::string image_id;
    std::size_t scene = 0;
    std::vector<std::size_t> objects;

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Corpus {
    ObjectVocabulary vocab;
    SceneLabelSet scenes;
    std::vector<ImageRecord> records;

    std::size_t n_objs() const noexcept { return vocab.size(); }
    std::size_t n_scenes() const noexcept { return scenes.size(); }
    /// Number of records per scene index.
    std::vector<std::size_t> scene_counts() const;

    friend bool operator==(const Corpus&, const Corpus&) = default;
};

/// Throws IndexError if any record references an index outside the label sets,
/// and normalizes nothing: callers are expected to build records through
/// make_record or the loaders.
void validate_corpus(const Corpus& corpus);

/// Sorts and deduplicates `objects`, then checks ranges.
ImageRecord make_record(std::string image_id, std::size_t scene, std::vector<std::size_t> objects,
                        std::size_t n_objs, std::size_t n_scenes);

/// Precomputed per-image CNN scene features, keyed by image id.
class SceneFeatureTable {
public:
    SceneFeatureTable() = default;
    SceneFeatureTable(std::size_t dim, std::unordered_map<std::string, std::vector<double>> rows);

    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return rows_.size(); }
    const std::vector<double>* find(const std::string& image_id) const;

private:
    std::size_t dim_ = 0;
    std::unordered_map<std::string, std::vector<double>> rows_;
};

std::vector<std::string> read_label_lines(const std::filesystem::path& path);
ObjectVocabulary load_vocab(const std::filesystem::path& path);
SceneLabelSet load_scene_labels(const std::filesystem::path& path);
void save_labels(const std::filesystem::path& path, const std::vector<std::string>& names);

Corpus parse_corpus(std::string_view jsonl, const ObjectVocabulary& vocab, const SceneLabelSet& scenes);
Corpus load_corpus(const std::filesystem::path& path, const ObjectVocabulary& vocab, const SceneLabelSet& scenes);
std::string corpus_to_jsonl(const Corpus& corpus);
void save_corpus(const std::filesystem::path& path, const Corpus& corpus);

SceneFeatureTable parse_scene_features(std::string_view jsonl);
SceneFeatureTable load_scene_features(const std::filesystem::path& path);

/// Deterministic stratified split. Returns (train, validation); both keep the
/// input's record order.
std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double val_fraction, std::uint64_t seed);

} // namespace borm
