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

#include "borm/models.hpp"

#include "borm/binio.hpp"
#include "borm/error.hpp"
#include "borm/features.hpp"
#include "borm/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>

namespace borm {

using json = nlohmann::json;

namespace {

constexpr std::size_t kMaxCachedValues = std::size_t{1} << 24;

void require_counts(std::size_t n_objs, std::size_t n_scenes) {
    if(n_objs == 0 || n_scenes == 0)
        throw Error(ErrorCode::kConfig, "object and scene counts must be positive");
}

bool is_cnn_width(std::size_t d) { return d == 512 || d == 2048; }

void require_same_labels(const CooccurrenceStats& stats, const Corpus& corpus) {
    std::vector<std::string> missing;
    if(stats.object_names != corpus.vocab.names())
        missing.push_back("object vocabulary");
    if(stats.scene_names != corpus.scenes.names())
        missing.push_back("scene labels");
    if(!missing.empty()) {
        std::string what = missing.front();
        if(missing.size() > 1)
            what += " and " + missing.back();
        throw Error(ErrorCode::kVocabMismatch, "statistics were fitted with a different " + what);
    }
}

json config_to_json(const TrainConfig& c) {
    return {{"lr0", c.lr0},
            {"momentum", c.momentum},
            {"weight_decay", c.weight_decay},
            {"epochs", c.epochs},
            {"lr_step", c.lr_step},
            {"lr_factor", c.lr_factor},
            {"batch_size", c.batch_size},
            {"seed", c.seed},
            {"best_reload", c.best_reload}};
}

TrainConfig config_from_json(const json& j) {
    TrainConfig c;
    c.lr0 = j.at("lr0").get<double>();
    c.momentum = j.at("momentum").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.epochs = j.at("epochs").get<std::size_t>();
    c.lr_step = j.at("lr_step").get<std::size_t>();
    c.lr_factor = j.at("lr_factor").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.best_reload = j.at("best_reload").get<bool>();
    return c;
}

json spec_json(const ModelSpec& s) {
    return {{"kind", model_kind_name(s.kind)},
            {"n_objs", s.n_objs},
            {"n_scenes", s.n_scenes},
            {"f_dim", s.f_dim},
            {"scene_dim", s.scene_dim},
            {"scaled", s.scaled},
            {"fborm_relu", s.fborm_relu},
            {"seed", s.seed},
            {"stats_ref", s.stats_ref},
            {"objects", s.object_names},
            {"scenes", s.scene_names}};
}

ModelSpec spec_from(const json& j) {
    ModelSpec s;
    s.kind = parse_model_kind(j.at("kind").get<std::string>());
    s.n_objs = j.at("n_objs").get<std::size_t>();
    s.n_scenes = j.at("n_scenes").get<std::size_t>();
    s.f_dim = j.at("f_dim").get<std::size_t>();
    s.scene_dim = j.at("scene_dim").get<std::size_t>();
    s.scaled = j.at("scaled").get<bool>();
    s.fborm_relu = j.at("fborm_relu").get<bool>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.stats_ref = j.at("stats_ref").get<std::string>();
    s.object_names = j.at("objects").get<std::vector<std::string>>();
    s.scene_names = j.at("scenes").get<std::vector<std::string>>();
    return s;
}

std::vector<std::string> checkpoint_names(ModelKind kind) {
    if(kind == ModelKind::kCborm)
        return {"branch.bmlp", "fusion.bmlp"};
    return {"head.bmlp"};
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    binio::write_file(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

} // namespace

const char* model_kind_name(ModelKind kind) noexcept {
    switch(kind) {
        case ModelKind::kIom: return "iom";
        case ModelKind::kBorm: return "borm";
        case ModelKind::kCborm: return "cborm";
    }
    return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
    if(name == "iom")
        return ModelKind::kIom;
    if(name == "borm")
        return ModelKind::kBorm;
    if(name == "cborm")
        return ModelKind::kCborm;
    throw Error(ErrorCode::kConfig, "unknown model kind '" + name + "'");
}

std::size_t scaled_width(std::size_t n_objs) { return std::max<std::size_t>(8 * n_objs * n_objs, 16); }

std::vector<std::size_t> iom_dims(std::size_t n_objs, std::size_t n_scenes) {
    require_counts(n_objs, n_scenes);
    return {n_objs, kIomHidden, n_scenes};
}

std::vector<std::size_t> borm_dims(std::size_t n_objs, std::size_t n_scenes, bool scaled) {
    require_counts(n_objs, n_scenes);
    const std::size_t in = n_objs * n_objs;
    if(scaled)
        return {in, scaled_width(n_objs), scaled_width(n_objs), n_scenes};
    return {in, kBormHidden1, kBormHidden2, n_scenes};
}

CbormDims cborm_dims(std::size_t n_objs, std::size_t n_scenes, std::size_t f_dim, std::size_t scene_dim,
                     bool scaled) {
    require_counts(n_objs, n_scenes);
    if(!is_cnn_width(f_dim))
        throw Error(ErrorCode::kConfig, "F_BORM width must be 512 or 2048, got " + std::to_string(f_dim));
    if(scene_dim == 0)
        scene_dim = f_dim;
    const std::size_t hidden = scaled ? scaled_width(n_objs) : kCbormBranchHidden;
    return {{n_objs * n_objs, hidden, f_dim}, {f_dim + scene_dim, kCbormFusionHidden, n_scenes}};
}

MlpModel build_iom(std::size_t n_objs, std::size_t n_scenes, std::uint64_t seed) {
    return init_model(iom_dims(n_objs, n_scenes), seed);
}

MlpModel build_borm(std::size_t n_objs, std::size_t n_scenes, std::uint64_t seed, bool scaled) {
    return init_model(borm_dims(n_objs, n_scenes, scaled), seed);
}

CbormModel build_cborm(std::size_t n_objs, std::size_t n_scenes, std::size_t f_dim, std::uint64_t seed,
                       std::size_t scene_dim, bool scaled, bool fborm_relu) {
    const CbormDims d = cborm_dims(n_objs, n_scenes, f_dim, scene_dim, scaled);
    return {init_model(d.branch, seed, fborm_relu ? Activation::kRelu : Activation::kNone),
            init_model(d.fusion, derive_seed(seed, 1))};
}

void ModelSpec::validate() const {
    require_counts(n_objs, n_scenes);
    if(object_names.size() != n_objs || scene_names.size() != n_scenes)
        throw Error(ErrorCode::kConfig, "model spec label lists do not match its dimensions");
    switch(kind) {
        case ModelKind::kIom:
            if(!stats_ref.empty())
                throw Error(ErrorCode::kConfig, "IOM models take no co-occurrence statistics");
            break;
        case ModelKind::kBorm:
            if(stats_ref.empty())
                throw Error(ErrorCode::kConfig, "BORM models need co-occurrence statistics");
            break;
        case ModelKind::kCborm:
            if(stats_ref.empty())
                throw Error(ErrorCode::kConfig, "CBORM models need co-occurrence statistics");
            if(!is_cnn_width(f_dim))
                throw Error(ErrorCode::kConfig, "CBORM F_BORM width must be 512 or 2048");
            if(!is_cnn_width(scene_dim))
                throw Error(ErrorCode::kConfig, "CBORM scene features must be 512 or 2048 wide, got " +
                                                    std::to_string(scene_dim));
            break;
    }
}

Network build_network(const ModelSpec& spec) {
    spec.validate();
    switch(spec.kind) {
        case ModelKind::kIom: return Network::single(build_iom(spec.n_objs, spec.n_scenes, spec.seed));
        case ModelKind::kBorm: return Network::single(build_borm(spec.n_objs, spec.n_scenes, spec.seed, spec.scaled));
        case ModelKind::kCborm: {
            CbormModel m = build_cborm(spec.n_objs, spec.n_scenes, spec.f_dim, spec.seed, spec.scene_dim, spec.scaled,
                                       spec.fborm_relu);
            return Network::two_stream(std::move(m.borm_branch), std::move(m.fusion_head));
        }
    }
    throw Error(ErrorCode::kInternal, "unhandled model kind");
}

CorpusSource::CorpusSource(const ModelSpec& spec, const Corpus& corpus, const CooccurrenceStats* stats,
                           const SceneFeatureTable* features, bool cache)
    : spec_(&spec), corpus_(&corpus), stats_(stats) {
    if(corpus.n_objs() != spec.n_objs || corpus.n_scenes() != spec.n_scenes)
        throw Error(ErrorCode::kDimMismatch, "corpus label sets do not match the model spec");
    if(spec.kind == ModelKind::kIom) {
        primary_dim_ = spec.n_objs;
    } else {
        if(!stats)
            throw Error(ErrorCode::kConfig, "BORM features need co-occurrence statistics");
        if(stats->n_objs != spec.n_objs)
            throw Error(ErrorCode::kDimMismatch, "statistics and model disagree on object count");
        primary_dim_ = spec.n_objs * spec.n_objs;
    }
    if(spec.kind == ModelKind::kCborm) {
        if(!features)
            throw Error(ErrorCode::kMissingSceneFeature, "CBORM needs a scene feature table");
        if(features->dim() != spec.scene_dim)
            throw Error(ErrorCode::kDimMismatch, "scene features are " + std::to_string(features->dim()) +
                                                     "-dimensional, model expects " + std::to_string(spec.scene_dim));
        side_dim_ = spec.scene_dim;
        side_rows_.reserve(corpus.records.size());
        for(const auto& r : corpus.records) {
            const auto* row = features->find(r.image_id);
            if(!row)
                throw Error(ErrorCode::kMissingSceneFeature, "'" + r.image_id + "'");
            side_rows_.push_back(row);
        }
    }
    if(cache && corpus.records.size() * primary_dim_ <= kMaxCachedValues) {
        cache_.resize(corpus.records.size() * primary_dim_);
        for(std::size_t k = 0; k < corpus.records.size(); ++k) {
            std::span<double> row(cache_.data() + k * primary_dim_, primary_dim_);
            if(spec.kind == ModelKind::kIom)
                iom_input_into(corpus.records[k], spec.n_objs, row);
            else
                borm_feature_into(corpus.records[k], *stats, row);
        }
    }
}

void CorpusSource::fill(std::size_t index, std::span<double> primary, std::span<double> side) const {
    if(!cache_.empty()) {
        const double* row = cache_.data() + index * primary_dim_;
        std::copy(row, row + primary_dim_, primary.begin());
    } else if(spec_->kind == ModelKind::kIom) {
        iom_input_into(corpus_->records[index], spec_->n_objs, primary);
    } else {
        borm_feature_into(corpus_->records[index], *stats_, primary);
    }
    if(side_dim_ > 0)
        std::copy(side_rows_[index]->begin(), side_rows_[index]->end(), side.begin());
}

ModelBundle train_model(const Corpus& corpus, const CooccurrenceStats* stats, const SceneFeatureTable* features,
                        const TrainRequest& request) {
    request.config.validate();
    ModelSpec spec;
    spec.kind = request.kind;
    spec.n_objs = corpus.n_objs();
    spec.n_scenes = corpus.n_scenes();
    spec.scaled = request.scaled;
    spec.fborm_relu = request.fborm_relu;
    spec.seed = request.config.seed;
    spec.object_names = corpus.vocab.names();
    spec.scene_names = corpus.scenes.names();
    if(request.kind == ModelKind::kIom) {
        if(stats)
            throw Error(ErrorCode::kConfig, "IOM models take no co-occurrence statistics");
    } else {
        if(!stats)
            throw Error(ErrorCode::kConfig, std::string(model_kind_name(request.kind)) + " needs co-occurrence statistics");
        require_same_labels(*stats, corpus);
        spec.stats_ref = stats_id(*stats);
    }
    if(request.kind == ModelKind::kCborm) {
        if(!features)
            throw Error(ErrorCode::kMissingSceneFeature, "CBORM training needs a scene feature table");
        spec.f_dim = request.f_dim;
        spec.scene_dim = features->dim();
    }
    spec.validate();

    auto [train_part, val_part] = split_corpus(corpus, request.val_fraction, request.config.seed);
    const CorpusSource train_src(spec, train_part, stats, features, request.cache_features);
    const CorpusSource val_src(spec, val_part, stats, features, request.cache_features);
    TrainResult result = train_network(build_network(spec), train_src, val_src, request.config);

    ModelBundle bundle;
    bundle.spec = std::move(spec);
    bundle.net = std::move(result.best.net);
    bundle.velocity = std::move(result.best.velocity);
    bundle.epoch = result.best.epoch;
    bundle.best_accuracy = result.best.best_accuracy;
    if(stats)
        bundle.stats = *stats;
    bundle.config = request.config;
    bundle.history = std::move(result.history);
    return bundle;
}

Prediction predict(const ModelBundle& bundle, const ImageRecord& record, const SceneFeatureTable* features) {
    const ModelSpec& spec = bundle.spec;
    if(record.scene >= spec.n_scenes)
        throw Error(ErrorCode::kIndex, "record '" + record.image_id + "': scene index out of range");
    std::vector<double> primary;
    std::vector<double> side;
    if(spec.kind == ModelKind::kIom) {
        primary.resize(spec.n_objs);
        iom_input_into(record, spec.n_objs, primary);
    } else {
        if(!bundle.stats)
            throw Error(ErrorCode::kConfig, "bundle is missing its co-occurrence statistics");
        primary.resize(spec.n_objs * spec.n_objs);
        borm_feature_into(record, *bundle.stats, primary);
    }
    if(spec.kind == ModelKind::kCborm) {
        if(!features)
            throw Error(ErrorCode::kMissingSceneFeature, "'" + record.image_id + "' (no scene feature table)");
        if(features->dim() != spec.scene_dim)
            throw Error(ErrorCode::kDimMismatch, "scene features are " + std::to_string(features->dim()) +
                                                     "-dimensional, model expects " + std::to_string(spec.scene_dim));
        const auto* row = features->find(record.image_id);
        if(!row)
            throw Error(ErrorCode::kMissingSceneFeature, "'" + record.image_id + "'");
        side = *row;
    }
    const std::vector<double> logits = network_logits(bundle.net, primary, side);
    return {argmax(logits), softmax(logits)};
}

std::string model_spec_to_json(const ModelSpec& spec) { return spec_json(spec).dump(2); }

ModelSpec model_spec_from_json(const std::string& text) {
    try {
        return spec_from(json::parse(text));
    } catch(const json::exception& e) {
        throw Error(ErrorCode::kParse, std::string("model spec: ") + e.what());
    }
}

void save_bundle(const ModelBundle& bundle, const std::filesystem::path& dir) {
    bundle.spec.validate();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if(ec)
        throw Error(ErrorCode::kIo, "cannot create '" + dir.string() + "': " + ec.message());
    json history = json::array();
    for(const auto& h : bundle.history)
        history.push_back({{"epoch", h.epoch}, {"lr", h.lr}, {"train_loss", h.train_loss}, {"val_accuracy", h.val_accuracy}});
    const auto names = checkpoint_names(bundle.spec.kind);
    json doc = {{"format", "borm-bundle"},
                {"version", 1},
                {"spec", spec_json(bundle.spec)},
                {"train_config", config_to_json(bundle.config)},
                {"checkpoints", names},
                {"history", std::move(history)},
                {"stats_file", bundle.stats ? "stats.bin" : ""}};
    write_text(dir / "spec.json", doc.dump(2) + "\n");
    if(bundle.stats)
        save_stats(*bundle.stats, dir / "stats.bin");
    TrainState state{bundle.net, bundle.velocity, bundle.epoch, bundle.best_accuracy};
    if(state.velocity.empty())
        for(const auto& s : state.net.stages)
            state.velocity.push_back(zeros_like(s));
    for(std::size_t k = 0; k < names.size(); ++k)
        save_checkpoint(stage_checkpoint(state, k), dir / names[k]);
}

ModelBundle load_bundle(const std::filesystem::path& dir) {
    const auto bytes = binio::read_file(dir / "spec.json");
    json doc;
    try {
        doc = json::parse(bytes.begin(), bytes.end());
    } catch(const json::exception& e) {
        throw Error(ErrorCode::kParse, std::string("bundle spec.json: ") + e.what());
    }
    ModelBundle b;
    try {
        if(doc.at("format").get<std::string>() != "borm-bundle")
            throw Error(ErrorCode::kParse, "not a model bundle");
        if(doc.at("version").get<int>() != 1)
            throw Error(ErrorCode::kUnsupportedVersion, "bundle version " + doc.at("version").dump());
        b.spec = spec_from(doc.at("spec"));
        b.config = config_from_json(doc.at("train_config"));
        for(const auto& h : doc.at("history"))
            b.history.push_back({h.at("epoch").get<std::size_t>(), h.at("lr").get<double>(),
                                 h.at("train_loss").get<double>(), h.at("val_accuracy").get<double>()});
    } catch(const json::exception& e) {
        throw Error(ErrorCode::kParse, std::string("bundle spec.json: ") + e.what());
    }
    b.spec.validate();
    if(!b.spec.stats_ref.empty()) {
        b.stats = load_stats(dir / "stats.bin");
        if(stats_id(*b.stats) != b.spec.stats_ref)
            throw Error(ErrorCode::kCorruptFile, "bundle stats do not match stats_ref " + b.spec.stats_ref);
    }
    std::vector<Checkpoint> parts;
    for(const auto& name : checkpoint_names(b.spec.kind))
        parts.push_back(load_checkpoint(dir / name));
    TrainState state = state_from_checkpoints(
        b.spec.kind == ModelKind::kCborm ? Topology::kTwoStream : Topology::kSingle, std::move(parts));
    std::vector<std::vector<std::size_t>> expected;
    switch(b.spec.kind) {
        case ModelKind::kIom: expected = {iom_dims(b.spec.n_objs, b.spec.n_scenes)}; break;
        case ModelKind::kBorm: expected = {borm_dims(b.spec.n_objs, b.spec.n_scenes, b.spec.scaled)}; break;
        case ModelKind::kCborm: {
            const CbormDims d = cborm_dims(b.spec.n_objs, b.spec.n_scenes, b.spec.f_dim, b.spec.scene_dim, b.spec.scaled);
            expected = {d.branch, d.fusion};
            break;
        }
    }
    for(std::size_t k = 0; k < expected.size(); ++k)
        if(state.net.stages[k].dims() != expected[k])
            throw Error(ErrorCode::kCorruptFile, "checkpoint shapes do not match the bundle spec");
    b.net = std::move(state.net);
    b.velocity = std::move(state.velocity);
    b.epoch = state.epoch;
    b.best_accuracy = state.best_accuracy;
    return b;
}

} // namespace borm
