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

#include "borm/binio.hpp"
#include "borm/error.hpp"
#include "borm/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace borm {

using json = nlohmann::json;

template <typename Tag>
LabelSet<Tag>::LabelSet(std::vector<std::string> names) : names_(std::move(names)) {
    if(names_.empty())
        throw Error(ErrorCode::kEmptyVocabulary, "label list has no entries");
    index_.reserve(names_.size());
    for(std::size_t i = 0; i < names_.size(); ++i) {
        if(names_[i].empty())
            throw Error(ErrorCode::kInvalidArgument, "empty label at index " + std::to_string(i));
        if(!index_.emplace(names_[i], i).second)
            throw Error(ErrorCode::kDuplicateVocabEntry, "'" + names_[i] + "'");
    }
}

template <typename Tag>
std::optional<std::size_t> LabelSet<Tag>::find(std::string_view name) const {
    auto it = index_.find(std::string(name));
    if(it == index_.end())
        return std::nullopt;
    return it->second;
}

template class LabelSet<ObjectTag>;
template class LabelSet<SceneTag>;

std::vector<std::size_t> Corpus::scene_counts() const {
    std::vector<std::size_t> counts(n_scenes(), 0);
    for(const auto& r : records)
        ++counts.at(r.scene);
    return counts;
}

void validate_corpus(const Corpus& corpus) {
    for(const auto& r : corpus.records) {
        if(r.scene >= corpus.n_scenes())
            throw Error(ErrorCode::kIndex, "record '" + r.image_id + "': scene index out of range");
        for(std::size_t k = 0; k < r.objects.size(); ++k) {
            if(r.objects[k] >= corpus.n_objs())
                throw Error(ErrorCode::kIndex, "record '" + r.image_id + "': object index out of range");
            if(k > 0 && r.objects[k] <= r.objects[k - 1])
                throw Error(ErrorCode::kInvalidArgument, "record '" + r.image_id + "': objects not a sorted set");
        }
    }
}

ImageRecord make_record(std::string image_id, std::size_t scene, std::vector<std::size_t> objects,
                        std::size_t n_objs, std::size_t n_scenes) {
    if(scene >= n_scenes)
        throw Error(ErrorCode::kIndex, "scene index " + std::to_string(scene) + " out of range");
    std::sort(objects.begin(), objects.end());
    objects.erase(std::unique(objects.begin(), objects.end()), objects.end());
    if(!objects.empty() && objects.back() >= n_objs)
        throw Error(ErrorCode::kIndex, "object index " + std::to_string(objects.back()) + " out of range");
    return ImageRecord{std::move(image_id), scene, std::move(objects)};
}

SceneFeatureTable::SceneFeatureTable(std::size_t dim, std::unordered_map<std::string, std::vector<double>> rows)
    : dim_(dim), rows_(std::move(rows)) {
    for(const auto& [id, v] : rows_) {
        if(v.size() != dim_)
            throw Error(ErrorCode::kDimMismatch, "feature '" + id + "' has length " + std::to_string(v.size()));
        for(double x : v)
            if(!std::isfinite(x))
                throw Error(ErrorCode::kNonFinite, "feature '" + id + "'");
    }
}

const std::vector<double>* SceneFeatureTable::find(const std::string& image_id) const {
    auto it = rows_.find(image_id);
    return it == rows_.end() ? nullptr : &it->second;
}

namespace {

std::string slurp(const std::filesystem::path& path) {
    const auto bytes = binio::read_file(path);
    return std::string(bytes.begin(), bytes.end());
}

// Calls fn(line_number, line) for every non-blank line; CR before LF is dropped.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while(pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if(end == std::string_view::npos)
            end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        ++line_no;
        if(!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        if(line.find_first_not_of(" \t") != std::string_view::npos)
            fn(line_no, line);
        pos = end + 1;
    }
}

std::string at_line(std::size_t line_no) { return "line " + std::to_string(line_no); }

} // namespace

std::vector<std::string> read_label_lines(const std::filesystem::path& path) {
    const std::string text = slurp(path);
    std::vector<std::string> names;
    for_each_line(text, [&](std::size_t, std::string_view line) { names.emplace_back(line); });
    if(names.empty())
        throw Error(ErrorCode::kEmptyVocabulary, "'" + path.string() + "' has no entries");
    return names;
}

ObjectVocabulary load_vocab(const std::filesystem::path& path) { return ObjectVocabulary(read_label_lines(path)); }

SceneLabelSet load_scene_labels(const std::filesystem::path& path) { return SceneLabelSet(read_label_lines(path)); }

void save_labels(const std::filesystem::path& path, const std::vector<std::string>& names) {
    std::string text;
    for(const auto& n : names) {
        text += n;
        text += '\n';
    }
    binio::write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

Corpus parse_corpus(std::string_view jsonl, const ObjectVocabulary& vocab, const SceneLabelSet& scenes) {
    Corpus corpus{vocab, scenes, {}};
    for_each_line(jsonl, [&](std::size_t line_no, std::string_view line) {
        json j;
        try {
            j = json::parse(line);
        } catch(const json::exception& e) {
            throw Error(ErrorCode::kParse, at_line(line_no) + ": " + e.what());
        }
        if(!j.is_object() || !j.contains("image_id") || !j.contains("scene") || !j.contains("objects") ||
           !j["image_id"].is_string() || !j["scene"].is_string() || !j["objects"].is_array())
            throw Error(ErrorCode::kParse, at_line(line_no) + ": expected {image_id, scene, objects}");
        const std::string scene_name = j["scene"].get<std::string>();
        const auto scene = scenes.find(scene_name);
        if(!scene)
            throw Error(ErrorCode::kUnknownLabel, at_line(line_no) + ": scene '" + scene_name + "'");
        std::vector<std::size_t> objects;
        objects.reserve(j["objects"].size());
        for(const auto& tok : j["objects"]) {
            if(tok.is_string()) {
                const auto idx = vocab.find(tok.get<std::string>());
                if(!idx)
                    throw Error(ErrorCode::kUnknownLabel,
                                at_line(line_no) + ": object '" + tok.get<std::string>() + "'");
                objects.push_back(*idx);
            } else if(tok.is_number_unsigned() || (tok.is_number_integer() && tok.get<std::int64_t>() >= 0)) {
                const auto idx = tok.get<std::uint64_t>();
                if(idx >= vocab.size())
                    throw Error(ErrorCode::kUnknownLabel, at_line(line_no) + ": object index " + std::to_string(idx));
                objects.push_back(static_cast<std::size_t>(idx));
            } else {
                throw Error(ErrorCode::kUnknownLabel, at_line(line_no) + ": object token " + tok.dump());
            }
        }
        corpus.records.push_back(
            make_record(j["image_id"].get<std::string>(), *scene, std::move(objects), vocab.size(), scenes.size()));
    });
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, const ObjectVocabulary& vocab, const SceneLabelSet& scenes) {
    return parse_corpus(slurp(path), vocab, scenes);
}

std::string corpus_to_jsonl(const Corpus& corpus) {
    std::string out;
    for(const auto& r : corpus.records) {
        json objs = json::array();
        for(std::size_t o : r.objects)
            objs.push_back(corpus.vocab.name(o));
        json line = {{"image_id", r.image_id}, {"scene", corpus.scenes.name(r.scene)}, {"objects", std::move(objs)}};
        out += line.dump();
        out += '\n';
    }
    return out;
}

void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
    const std::string text = corpus_to_jsonl(corpus);
    binio::write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

SceneFeatureTable parse_scene_features(std::string_view jsonl) {
    std::unordered_map<std::string, std::vector<double>> rows;
    std::size_t dim = 0;
    for_each_line(jsonl, [&](std::size_t line_no, std::string_view line) {
        json j;
        try {
            j = json::parse(line);
        } catch(const json::exception& e) {
            throw Error(ErrorCode::kParse, at_line(line_no) + ": " + e.what());
        }
        if(!j.is_object() || !j.contains("image_id") || !j.contains("feature") || !j["image_id"].is_string() ||
           !j["feature"].is_array())
            throw Error(ErrorCode::kParse, at_line(line_no) + ": expected {image_id, feature}");
        std::vector<double> v;
        v.reserve(j["feature"].size());
        for(const auto& x : j["feature"]) {
            if(!x.is_number())
                throw Error(ErrorCode::kParse, at_line(line_no) + ": non-numeric feature value");
            const double d = x.get<double>();
            if(!std::isfinite(d))
                throw Error(ErrorCode::kNonFinite, at_line(line_no));
            v.push_back(d);
        }
        if(rows.empty()) {
            if(v.empty())
                throw Error(ErrorCode::kDimMismatch, at_line(line_no) + ": empty feature vector");
            dim = v.size();
        } else if(v.size() != dim) {
            throw Error(ErrorCode::kDimMismatch, at_line(line_no) + ": length " + std::to_string(v.size()) +
                                                     ", expected " + std::to_string(dim));
        }
        const std::string id = j["image_id"].get<std::string>();
        if(!rows.emplace(id, std::move(v)).second)
            throw Error(ErrorCode::kParse, at_line(line_no) + ": duplicate image_id '" + id + "'");
    });
    if(rows.empty())
        throw Error(ErrorCode::kParse, "scene feature file has no records");
    return SceneFeatureTable(dim, std::move(rows));
}

SceneFeatureTable load_scene_features(const std::filesystem::path& path) { return parse_scene_features(slurp(path)); }

std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double val_fraction, std::uint64_t seed) {
    if(!(val_fraction >= 0.0 && val_fraction < 1.0))
        throw Error(ErrorCode::kInvalidArgument, "val_fraction must lie in [0, 1)");
    Corpus train{corpus.vocab, corpus.scenes, {}};
    Corpus val{corpus.vocab, corpus.scenes, {}};
    if(val_fraction == 0.0) {
        train.records = corpus.records;
        return {std::move(train), std::move(val)};
    }
    std::vector<std::vector<std::size_t>> by_scene(corpus.n_scenes());
    for(std::size_t r = 0; r < corpus.records.size(); ++r)
        by_scene.at(corpus.records[r].scene).push_back(r);

    std::vector<char> in_val(corpus.records.size(), 0);
    for(std::size_t s = 0; s < by_scene.size(); ++s) {
        auto& members = by_scene[s];
        if(members.empty())
            continue;
        const double expected = val_fraction * static_cast<double>(members.size());
        if(expected < 1.0)
            throw Error(ErrorCode::kSplitInfeasible, "scene '" + corpus.scenes.name(s) + "' has " +
                                                         std::to_string(members.size()) + " records");
        const std::size_t n_val = std::min(static_cast<std::size_t>(std::llround(expected)), members.size() - 1);
        SplitMix64 g(derive_seed(seed, s));
        deterministic_shuffle(members, g);
        for(std::size_t k = 0; k < n_val; ++k)
            in_val[members[k]] = 1;
    }
    for(std::size_t r = 0; r < corpus.records.size(); ++r)
        (in_val[r] ? val : train).records.push_back(corpus.records[r]);
    return {std::move(train), std::move(val)};
}

} // namespace borm
