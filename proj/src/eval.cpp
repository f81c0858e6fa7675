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

#include "borm/eval.hpp"

#include "borm/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <optional>
#include <set>
#include <thread>

namespace borm {

using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double ratio(std::size_t num, std::size_t den) {
    return den == 0 ? kNaN : static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed(double v, int digits) {
    if(std::isnan(v))
        return "n/a";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
    return buf;
}

std::string percent(double v) {
    if(std::isnan(v))
        return "n/a";
    return fixed(100.0 * v, 2) + "%";
}

json number_or_null(double v) { return std::isnan(v) ? json(nullptr) : json(v); }

double number_from(const json& j) { return j.is_null() ? kNaN : j.get<double>(); }

std::string pad(const std::string& s, std::size_t width, bool right = false) {
    if(s.size() >= width)
        return s;
    const std::string fill(width - s.size(), ' ');
    return right ? fill + s : s + fill;
}

std::string csv_field(const std::string& s) {
    if(s.find_first_of(",\"\n") == std::string::npos)
        return s;
    std::string out = "\"";
    for(char c : s) {
        if(c == '"')
            out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace

EvalReport make_report(std::vector<std::string> scene_names, const std::vector<std::size_t>& truth,
                       const std::vector<std::size_t>& predicted) {
    if(truth.size() != predicted.size())
        throw Error(ErrorCode::kDimMismatch, "truth and prediction counts differ");
    const std::size_t s = scene_names.size();
    EvalReport r;
    r.scene_names = std::move(scene_names);
    r.n_records = truth.size();
    r.true_counts.assign(s, 0);
    r.correct_counts.assign(s, 0);
    r.confusion.assign(s * s, 0);
    std::size_t correct = 0;
    for(std::size_t k = 0; k < truth.size(); ++k) {
        if(truth[k] >= s || predicted[k] >= s)
            throw Error(ErrorCode::kIndex, "scene index out of range in report input");
        ++r.true_counts[truth[k]];
        ++r.confusion[truth[k] * s + predicted[k]];
        if(truth[k] == predicted[k]) {
            ++r.correct_counts[truth[k]];
            ++correct;
        }
    }
    r.overall_accuracy = ratio(correct, r.n_records);
    r.per_class_accuracy.resize(s);
    for(std::size_t j = 0; j < s; ++j)
        r.per_class_accuracy[j] = ratio(r.correct_counts[j], r.true_counts[j]);
    return r;
}

CorpusPredictions predict_corpus(const ModelBundle& bundle, const Corpus& corpus, const SceneFeatureTable* features,
                                 const EvalOptions& options) {
    const std::size_t n = corpus.records.size();
    std::vector<std::optional<Prediction>> slots(n);
    std::vector<char> missing(n, 0);
    const bool needs_features = bundle.spec.kind == ModelKind::kCborm;
    if(needs_features && features && features->dim() != bundle.spec.scene_dim)
        throw Error(ErrorCode::kDimMismatch, "scene features are " + std::to_string(features->dim()) +
                                                 "-dimensional, model expects " + std::to_string(bundle.spec.scene_dim));

    auto work = [&](std::size_t begin, std::size_t end) {
        for(std::size_t k = begin; k < end; ++k) {
            const ImageRecord& rec = corpus.records[k];
            if(needs_features && (!features || !features->find(rec.image_id))) {
                missing[k] = 1;
                continue;
            }
            slots[k] = predict(bundle, rec, features);
        }
    };
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(options.threads, n / 64 + 1));
    if(workers == 1) {
        work(0, n);
    } else {
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(workers);
        for(std::size_t w = 0; w < workers; ++w)
            pool.emplace_back([&, w] {
                try {
                    work(n * w / workers, n * (w + 1) / workers);
                } catch(...) {
                    errors[w] = std::current_exception();
                }
            });
        for(auto& t : pool)
            t.join();
        for(auto& e : errors)
            if(e)
                std::rethrow_exception(e);
    }

    CorpusPredictions out;
    for(std::size_t k = 0; k < n; ++k) {
        if(missing[k]) {
            if(!options.skip_missing)
                throw Error(ErrorCode::kMissingSceneFeature, "'" + corpus.records[k].image_id + "'");
            out.skipped.push_back(corpus.records[k].image_id);
            continue;
        }
        out.record_index.push_back(k);
        out.predictions.push_back(std::move(*slots[k]));
    }
    return out;
}

EvalReport evaluate(const ModelBundle& bundle, const Corpus& corpus, const SceneFeatureTable* features,
                    const EvalOptions& options) {
    if(corpus.scenes.names() != bundle.spec.scene_names || corpus.vocab.names() != bundle.spec.object_names)
        throw Error(ErrorCode::kLabelSetMismatch,
                    "corpus object/scene lists differ from the model's (use cross evaluation to re-map by name)");
    const CorpusPredictions preds = predict_corpus(bundle, corpus, features, options);
    std::vector<std::size_t> truth;
    std::vector<std::size_t> predicted;
    for(std::size_t k = 0; k < preds.record_index.size(); ++k) {
        truth.push_back(corpus.records[preds.record_index[k]].scene);
        predicted.push_back(preds.predictions[k].scene);
    }
    EvalReport r = make_report(bundle.spec.scene_names, truth, predicted);
    r.skipped = preds.skipped;
    return r;
}

Corpus remap_to_bundle(const ModelBundle& bundle, const Corpus& corpus) {
    const ObjectVocabulary target_objs(bundle.spec.object_names);
    const SceneLabelSet target_scenes(bundle.spec.scene_names);
    std::set<std::string> unmatched;
    for(const auto& n : corpus.vocab.names())
        if(!target_objs.find(n))
            unmatched.insert("object '" + n + "'");
    for(const auto& n : target_objs.names())
        if(!corpus.vocab.find(n))
            unmatched.insert("object '" + n + "'");
    for(const auto& n : corpus.scenes.names())
        if(!target_scenes.find(n))
            unmatched.insert("scene '" + n + "'");
    for(const auto& n : target_scenes.names())
        if(!corpus.scenes.find(n))
            unmatched.insert("scene '" + n + "'");
    if(!unmatched.empty()) {
        std::string list;
        for(const auto& u : unmatched)
            list += (list.empty() ? "" : ", ") + u;
        throw Error(ErrorCode::kVocabMismatch, "unmatched labels: " + list);
    }
    std::vector<std::size_t> obj_map(corpus.n_objs());
    for(std::size_t k = 0; k < corpus.n_objs(); ++k)
        obj_map[k] = *target_objs.find(corpus.vocab.name(k));
    std::vector<std::size_t> scene_map(corpus.n_scenes());
    for(std::size_t k = 0; k < corpus.n_scenes(); ++k)
        scene_map[k] = *target_scenes.find(corpus.scenes.name(k));

    Corpus out{target_objs, target_scenes, {}};
    out.records.reserve(corpus.records.size());
    for(const auto& r : corpus.records) {
        std::vector<std::size_t> objs;
        objs.reserve(r.objects.size());
        for(std::size_t o : r.objects)
            objs.push_back(obj_map[o]);
        out.records.push_back(make_record(r.image_id, scene_map[r.scene], std::move(objs), out.n_objs(), out.n_scenes()));
    }
    return out;
}

EvalReport cross_eval(const ModelBundle& bundle, const Corpus& corpus, const SceneFeatureTable* features,
                      const EvalOptions& options) {
    return evaluate(bundle, remap_to_bundle(bundle, corpus), features, options);
}

ReportFormat parse_report_format(const std::string& name) {
    if(name == "text")
        return ReportFormat::kText;
    if(name == "json")
        return ReportFormat::kJson;
    if(name == "csv")
        return ReportFormat::kCsv;
    throw Error(ErrorCode::kConfig, "unknown report format '" + name + "'");
}

std::string render_report(const EvalReport& r, ReportFormat format) {
    const std::size_t s = r.scene_names.size();
    std::size_t correct_total = 0;
    for(auto c : r.correct_counts)
        correct_total += c;
    if(format == ReportFormat::kJson) {
        json per = json::array();
        for(double a : r.per_class_accuracy)
            per.push_back(number_or_null(a));
        json conf = json::array();
        for(std::size_t t = 0; t < s; ++t)
            conf.push_back(std::vector<std::size_t>(r.confusion.begin() + t * s, r.confusion.begin() + (t + 1) * s));
        json j = {{"scenes", r.scene_names},
                  {"n_records", r.n_records},
                  {"overall_accuracy", number_or_null(r.overall_accuracy)},
                  {"true_counts", r.true_counts},
                  {"correct_counts", r.correct_counts},
                  {"per_class_accuracy", std::move(per)},
                  {"confusion", std::move(conf)},
                  {"skipped", r.skipped}};
        return j.dump(2) + "\n";
    }
    if(format == ReportFormat::kCsv) {
        std::string out = "scene,true_count,correct,accuracy\n";
        for(std::size_t j = 0; j < s; ++j)
            out += csv_field(r.scene_names[j]) + "," + std::to_string(r.true_counts[j]) + "," +
                   std::to_string(r.correct_counts[j]) + "," + fixed(r.per_class_accuracy[j], 6) + "\n";
        out += "overall," + std::to_string(r.n_records) + "," + std::to_string(correct_total) + "," +
               fixed(r.overall_accuracy, 6) + "\n";
        return out;
    }
    std::size_t width = 7;
    for(const auto& n : r.scene_names)
        width = std::max(width, n.size());
    width += 2;
    std::string out;
    out += pad("Scene", width) + pad("Images", 9, true) + pad("Correct", 9, true) + pad("Accuracy", 11, true) + "\n";
    out += std::string(width + 29, '-') + "\n";
    for(std::size_t j = 0; j < s; ++j)
        out += pad(r.scene_names[j], width) + pad(std::to_string(r.true_counts[j]), 9, true) +
               pad(std::to_string(r.correct_counts[j]), 9, true) + pad(percent(r.per_class_accuracy[j]), 11, true) +
               "\n";
    out += std::string(width + 29, '-') + "\n";
    out += pad("Overall", width) + pad(std::to_string(r.n_records), 9, true) +
           pad(std::to_string(correct_total), 9, true) + pad(percent(r.overall_accuracy), 11, true) + "\n";
    if(!r.skipped.empty())
        out += "Skipped (missing scene features): " + std::to_string(r.skipped.size()) + "\n";
    out += "\nConfusion (rows: true, columns: predicted)\n";
    out += pad("", width);
    for(std::size_t p = 0; p < s; ++p)
        out += pad(std::to_string(p), 8, true);
    out += "\n";
    for(std::size_t t = 0; t < s; ++t) {
        out += pad(std::to_string(t) + " " + r.scene_names[t], width);
        for(std::size_t p = 0; p < s; ++p)
            out += pad(std::to_string(r.confusion_at(t, p)), 8, true);
        out += "\n";
    }
    return out;
}

EvalReport report_from_json(const std::string& text) {
    try {
        const json j = json::parse(text);
        EvalReport r;
        r.scene_names = j.at("scenes").get<std::vector<std::string>>();
        r.n_records = j.at("n_records").get<std::size_t>();
        r.overall_accuracy = number_from(j.at("overall_accuracy"));
        r.true_counts = j.at("true_counts").get<std::vector<std::size_t>>();
        r.correct_counts = j.at("correct_counts").get<std::vector<std::size_t>>();
        for(const auto& a : j.at("per_class_accuracy"))
            r.per_class_accuracy.push_back(number_from(a));
        for(const auto& row : j.at("confusion"))
            for(const auto& c : row)
                r.confusion.push_back(c.get<std::size_t>());
        r.skipped = j.at("skipped").get<std::vector<std::string>>();
        const std::size_t s = r.scene_names.size();
        if(r.true_counts.size() != s || r.correct_counts.size() != s || r.per_class_accuracy.size() != s ||
           r.confusion.size() != s * s)
            throw Error(ErrorCode::kParse, "report arrays do not match the scene count");
        return r;
    } catch(const json::exception& e) {
        throw Error(ErrorCode::kParse, std::string("report: ") + e.what());
    }
}

} // namespace borm
