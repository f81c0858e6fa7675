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

// Command-line front end. Talks to the library exclusively through the C API.

#include "borm/borm.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace {

using json = nlohmann::json;

struct RuntimeFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UsageFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(borm_status status) {
    if(status != BORM_OK)
        throw RuntimeFailure(borm_last_error());
}

std::string take(char* s) {
    std::string out(s ? s : "");
    borm_string_free(s);
    return out;
}

template <typename T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Labels = std::unique_ptr<borm_labels, Deleter<borm_labels, borm_labels_free>>;
using Corpus = std::unique_ptr<borm_corpus, Deleter<borm_corpus, borm_corpus_free>>;
using Stats = std::unique_ptr<borm_stats, Deleter<borm_stats, borm_stats_free>>;
using Features = std::unique_ptr<borm_features, Deleter<borm_features, borm_features_free>>;
using Bundle = std::unique_ptr<borm_bundle, Deleter<borm_bundle, borm_bundle_free>>;
using Report = std::unique_ptr<borm_report, Deleter<borm_report, borm_report_free>>;

Labels load_labels(const std::string& path) {
    borm_labels* out = nullptr;
    check(borm_labels_load(path.c_str(), &out));
    return Labels(out);
}

Corpus load_corpus(const std::string& path, const borm_labels* vocab, const borm_labels* scenes) {
    borm_corpus* out = nullptr;
    check(borm_corpus_load(path.c_str(), vocab, scenes, &out));
    return Corpus(out);
}

Corpus load_corpus(const std::string& path, const std::string& vocab, const std::string& scenes) {
    const auto v = load_labels(vocab);
    const auto s = load_labels(scenes);
    return load_corpus(path, v.get(), s.get());
}

Stats load_stats(const std::string& path) {
    borm_stats* out = nullptr;
    check(borm_stats_load(path.c_str(), &out));
    return Stats(out);
}

Features load_features(const std::string& path) {
    if(path.empty())
        return Features();
    borm_features* out = nullptr;
    check(borm_features_load(path.c_str(), &out));
    return Features(out);
}

Bundle load_bundle(const std::string& dir) {
    borm_bundle* out = nullptr;
    check(borm_bundle_load(dir.c_str(), &out));
    return Bundle(out);
}

// Corpus labelled against explicit label files when given, else against the
// bundle's own vocabulary and scene list.
Corpus load_corpus_for_bundle(const borm_bundle* bundle, const std::string& path, const std::string& vocab,
                              const std::string& scenes) {
    if(!vocab.empty() && !scenes.empty())
        return load_corpus(path, vocab, scenes);
    if(!vocab.empty() || !scenes.empty())
        throw UsageFailure("--vocab and --scenes must be given together");
    borm_labels* v = nullptr;
    borm_labels* s = nullptr;
    check(borm_bundle_labels(bundle, &v, &s));
    const Labels lv(v), ls(s);
    return load_corpus(path, lv.get(), ls.get());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << text;
    f.flush();
    if(!f)
        throw RuntimeFailure("IoError: cannot write '" + path + "'");
}

std::string read_text(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if(!f)
        throw RuntimeFailure("IoError: cannot read '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct Common {
    bool json = false;
    bool deterministic = false;
    unsigned threads = 1;
    std::uint64_t seed = 0;
    std::string sidecar;
};

void add_common(CLI::App* sub, Common& c) {
    sub->add_flag("--json", c.json, "Machine-readable output on stdout");
    sub->add_flag("--deterministic-output", c.deterministic, "Suppress timing lines");
    sub->add_option("--threads", c.threads, "Worker threads")->capture_default_str()->check(CLI::Range(1u, 1024u));
    sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    sub->add_option("--sidecar", c.sidecar, "Where to write the resolved run configuration");
}

json common_json(const Common& c) {
    return {{"json", c.json}, {"deterministic_output", c.deterministic}, {"threads", c.threads}, {"seed", c.seed}};
}

void write_sidecar(const std::string& command, const Common& c, const std::string& default_path, json config) {
    const std::string path = !c.sidecar.empty() ? c.sidecar
                             : !default_path.empty() ? default_path
                                                     : "borm-" + command + ".run.json";
    json doc = {{"tool", "borm"}, {"version", borm_version()}, {"command", command}};
    doc["common"] = common_json(c);
    doc["config"] = std::move(config);
    write_text(path, doc.dump(2) + "\n");
}

class Timer {
public:
    explicit Timer(const Common& c) : enabled_(!c.deterministic), start_(std::chrono::steady_clock::now()) {}
    void report(const char* what) const {
        if(!enabled_)
            return;
        const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start_;
        std::fprintf(stderr, "%s in %.3f s\n", what, d.count());
    }

private:
    bool enabled_;
    std::chrono::steady_clock::time_point start_;
};

struct FitFlags {
    bool uniform_prior = false;
    double smoothing = 0.0;
    std::string joint = "independent";
};

void add_fit_flags(CLI::App* sub, FitFlags& f) {
    sub->add_flag("--uniform-prior", f.uniform_prior, "Use a uniform scene prior");
    sub->add_option("--smoothing", f.smoothing, "Additive smoothing EPS for counts")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--joint", f.joint, "Pair joint estimator")
        ->capture_default_str()
        ->check(CLI::IsMember({"independent", "empirical"}));
}

borm_fit_options fit_options(const FitFlags& f, const Common& c) {
    borm_fit_options o;
    borm_fit_options_default(&o);
    o.uniform_prior = f.uniform_prior ? 1 : 0;
    o.smoothing = f.smoothing;
    o.joint = f.joint == "empirical" ? BORM_JOINT_EMPIRICAL : BORM_JOINT_INDEPENDENT;
    o.threads = c.threads;
    return o;
}

json fit_json(const FitFlags& f) {
    return {{"uniform_prior", f.uniform_prior}, {"smoothing", f.smoothing}, {"joint", f.joint}};
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
    Common common;
    std::string spec;
    std::string pair_signal;
    std::string out;
    std::string vocab;
    std::string scenes;
};

int run_synth(CLI::App* sub, const SynthArgs& a) {
    const std::string vocab = a.vocab.empty() ? a.out + ".vocab.txt" : a.vocab;
    const std::string scenes = a.scenes.empty() ? a.out + ".scenes.txt" : a.scenes;
    json config = {{"out", a.out}, {"vocab", vocab}, {"scenes", scenes}, {"spec_out", a.out + ".spec.json"}};
    json spec;
    if(!a.pair_signal.empty()) {
        char* text = nullptr;
        check(borm_synth_pair_signal_spec(a.common.seed, a.pair_signal == "test" ? 1 : 0, &text));
        spec = json::parse(take(text));
        config["pair_signal"] = a.pair_signal;
    } else {
        try {
            spec = json::parse(read_text(a.spec));
        } catch(const json::exception& e) {
            throw RuntimeFailure(std::string("ParseError: synth spec: ") + e.what());
        }
        if(sub->count("--seed") > 0)
            spec["seed"] = a.common.seed;
        config["spec_path"] = a.spec;
    }
    borm_corpus* raw = nullptr;
    check(borm_synth_generate(spec.dump().c_str(), &raw));
    const Corpus corpus(raw);
    check(borm_corpus_save(corpus.get(), a.out.c_str()));
    check(borm_corpus_save_labels(corpus.get(), vocab.c_str(), scenes.c_str()));
    write_text(a.out + ".spec.json", spec.dump(2) + "\n");
    write_sidecar("synth", a.common, a.out + ".run.json", config);
    const std::size_t n = borm_corpus_size(corpus.get());
    if(a.common.json)
        std::cout << json{{"records", n}, {"corpus", a.out}, {"vocab", vocab}, {"scenes", scenes}}.dump(2) << "\n";
    else
        std::cout << "wrote " << n << " records to " << a.out << "\n";
    return 0;
}

// ---------------------------------------------------------------- fit-stats

struct FitArgs {
    Common common;
    FitFlags fit;
    std::string corpus;
    std::string vocab;
    std::string scenes;
    std::string out;
    std::string dump_features;
};

int run_fit(const FitArgs& a) {
    const Timer timer(a.common);
    const auto corpus = load_corpus(a.corpus, a.vocab, a.scenes);
    const auto opts = fit_options(a.fit, a.common);
    borm_stats* raw = nullptr;
    check(borm_stats_fit(corpus.get(), &opts, &raw));
    const Stats stats(raw);
    check(borm_stats_save(stats.get(), a.out.c_str()));
    if(!a.dump_features.empty())
        check(borm_stats_dump_features(stats.get(), corpus.get(), a.dump_features.c_str()));
    timer.report("fitted statistics");
    json config = {{"corpus", a.corpus}, {"vocab", a.vocab},           {"scenes", a.scenes},
                   {"out", a.out},       {"fit", fit_json(a.fit)}, {"dump_features", a.dump_features}};
    write_sidecar("fit-stats", a.common, a.out + ".run.json", config);
    if(a.common.json) {
        char* text = nullptr;
        check(borm_stats_to_json(stats.get(), 1, &text));
        std::cout << take(text);
    } else {
        std::cout << "fitted statistics over " << borm_stats_n_objs(stats.get()) << " objects and "
                  << borm_stats_n_scenes(stats.get()) << " scenes from " << borm_corpus_size(corpus.get())
                  << " images; wrote " << a.out << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    Common common;
    FitFlags fit;
    std::string model = "iom";
    std::string corpus;
    std::string vocab;
    std::string scenes;
    std::string stats;
    std::string features;
    std::string out;
    std::string eval_corpus;
    std::string format = "text";
    std::size_t f_dim = 512;
    double lr = 0.01;
    double momentum = 0.9;
    double weight_decay = 1e-4;
    std::size_t epochs = 40;
    std::size_t batch_size = 128;
    std::size_t lr_step = 10;
    double lr_factor = 0.1;
    double val_fraction = 0.1;
    bool scaled = false;
    bool no_best_reload = false;
    bool linear_fborm = false;
};

void add_train_flags(CLI::App* sub, TrainArgs& a) {
    borm_train_options d;
    borm_train_options_default(&d);
    a.f_dim = d.f_dim;
    a.lr = d.lr;
    a.momentum = d.momentum;
    a.weight_decay = d.weight_decay;
    a.epochs = d.epochs;
    a.batch_size = d.batch_size;
    a.lr_step = d.lr_step;
    a.lr_factor = d.lr_factor;
    a.val_fraction = d.val_fraction;
    sub->add_option("--model", a.model, "Model kind")
        ->capture_default_str()
        ->check(CLI::IsMember({"iom", "borm", "cborm"}));
    sub->add_option("--f-dim", a.f_dim, "CBORM branch output width")
        ->capture_default_str()
        ->check(CLI::IsMember({512, 2048}));
    sub->add_option("--lr", a.lr, "Initial learning rate")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--momentum", a.momentum, "SGD momentum")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    sub->add_option("--weight-decay", a.weight_decay, "L2 weight decay")
        ->capture_default_str()
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--epochs", a.epochs, "Training epochs")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--batch-size", a.batch_size, "Mini-batch size")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--lr-step", a.lr_step, "Epochs between learning-rate decays")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--lr-factor", a.lr_factor, "Learning-rate decay factor")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--val-fraction", a.val_fraction, "Held-out validation fraction")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));
    sub->add_flag("--scaled", a.scaled, "Use desk-scale hidden widths");
    sub->add_flag("--no-best-reload", a.no_best_reload, "Do not reload the best checkpoint at decay boundaries");
    sub->add_flag("--linear-fborm", a.linear_fborm, "No activation on the CBORM branch output");
}

int run_train(const TrainArgs& a) {
    if(a.model == "cborm" && a.features.empty())
        throw UsageFailure("--model cborm requires --features");
    if(a.model == "iom" && !a.stats.empty())
        throw UsageFailure("--model iom does not use --stats");
    const Timer timer(a.common);
    const auto corpus = load_corpus(a.corpus, a.vocab, a.scenes);
    const auto features = load_features(a.features);
    Stats stats;
    if(a.model != "iom") {
        if(!a.stats.empty()) {
            stats = load_stats(a.stats);
        } else {
            const auto opts = fit_options(a.fit, a.common);
            borm_stats* raw = nullptr;
            check(borm_stats_fit(corpus.get(), &opts, &raw));
            stats.reset(raw);
        }
    }
    borm_train_options o;
    borm_train_options_default(&o);
    o.kind = a.model == "iom" ? BORM_MODEL_IOM : a.model == "borm" ? BORM_MODEL_BORM : BORM_MODEL_CBORM;
    o.f_dim = a.f_dim;
    o.scaled = a.scaled ? 1 : 0;
    o.fborm_relu = a.linear_fborm ? 0 : 1;
    o.val_fraction = a.val_fraction;
    o.lr = a.lr;
    o.momentum = a.momentum;
    o.weight_decay = a.weight_decay;
    o.epochs = a.epochs;
    o.lr_step = a.lr_step;
    o.lr_factor = a.lr_factor;
    o.batch_size = a.batch_size;
    o.seed = a.common.seed;
    o.best_reload = a.no_best_reload ? 0 : 1;
    o.threads = a.common.threads;
    borm_bundle* raw = nullptr;
    check(borm_train(corpus.get(), stats.get(), features.get(), &o, &raw));
    const Bundle bundle(raw);
    check(borm_bundle_save(bundle.get(), a.out.c_str()));
    timer.report("trained");

    json config = {{"model", a.model},
                   {"corpus", a.corpus},
                   {"vocab", a.vocab},
                   {"scenes", a.scenes},
                   {"stats", a.stats},
                   {"features", a.features},
                   {"out", a.out},
                   {"eval_corpus", a.eval_corpus},
                   {"format", a.format},
                   {"f_dim", a.f_dim},
                   {"lr", a.lr},
                   {"momentum", a.momentum},
                   {"weight_decay", a.weight_decay},
                   {"epochs", a.epochs},
                   {"batch_size", a.batch_size},
                   {"lr_step", a.lr_step},
                   {"lr_factor", a.lr_factor},
                   {"val_fraction", a.val_fraction},
                   {"scaled", a.scaled},
                   {"best_reload", !a.no_best_reload},
                   {"fborm_relu", !a.linear_fborm},
                   {"fit", fit_json(a.fit)},
                   {"stats_fitted_from_corpus", a.model != "iom" && a.stats.empty()}};
    write_sidecar("train", a.common, a.out + "/run_config.json", config);

    char* text = nullptr;
    check(borm_bundle_summary(bundle.get(), &text));
    json summary = json::parse(take(text));
    for(const auto& h : summary["history"])
        std::fprintf(stderr, "epoch %3zu  lr %-8g  loss %.6f  val_acc %.4f\n", h["epoch"].get<std::size_t>(),
                     h["lr"].get<double>(), h["train_loss"].get<double>(), h["val_accuracy"].get<double>());

    Report report;
    if(!a.eval_corpus.empty()) {
        const auto test = load_corpus(a.eval_corpus, a.vocab, a.scenes);
        borm_eval_options eo;
        borm_eval_options_default(&eo);
        eo.threads = a.common.threads;
        borm_report* r = nullptr;
        check(borm_evaluate(bundle.get(), test.get(), features.get(), &eo, &r));
        report.reset(r);
    }
    if(a.common.json) {
        json doc = {{"bundle", a.out}, {"summary", summary}};
        if(report) {
            char* r = nullptr;
            check(borm_report_render(report.get(), "json", &r));
            doc["report"] = json::parse(take(r));
        }
        std::cout << doc.dump(2) << "\n";
    } else {
        std::printf("trained %s model; best epoch %zu, validation accuracy %.4f; wrote %s\n", a.model.c_str(),
                    summary["best_epoch"].get<std::size_t>(), summary["best_val_accuracy"].get<double>(),
                    a.out.c_str());
        std::fflush(stdout);
        if(report) {
            char* r = nullptr;
            check(borm_report_render(report.get(), a.format.c_str(), &r));
            std::cout << take(r);
        }
    }
    return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    Common common;
    std::string bundle;
    std::string corpus;
    std::string vocab;
    std::string scenes;
    std::string features;
    std::string format = "text";
    std::string out;
    bool cross = false;
    bool skip_missing = false;
};

int run_eval(const EvalArgs& a) {
    const auto bundle = load_bundle(a.bundle);
    const auto corpus = load_corpus_for_bundle(bundle.get(), a.corpus, a.vocab, a.scenes);
    const auto features = load_features(a.features);
    borm_eval_options eo;
    borm_eval_options_default(&eo);
    eo.cross = a.cross ? 1 : 0;
    eo.skip_missing = a.skip_missing ? 1 : 0;
    eo.threads = a.common.threads;
    borm_report* raw = nullptr;
    check(borm_evaluate(bundle.get(), corpus.get(), features.get(), &eo, &raw));
    const Report report(raw);
    const std::string format = a.common.json ? "json" : a.format;
    char* text = nullptr;
    check(borm_report_render(report.get(), format.c_str(), &text));
    const std::string rendered = take(text);
    if(!a.out.empty())
        write_text(a.out, rendered);
    json config = {{"bundle", a.bundle},         {"corpus", a.corpus}, {"vocab", a.vocab},
                   {"scenes", a.scenes},         {"features", a.features}, {"format", format},
                   {"out", a.out},               {"cross", a.cross},   {"skip_missing", a.skip_missing}};
    write_sidecar("eval", a.common, a.out.empty() ? "" : a.out + ".run.json", config);
    std::cout << rendered;
    return 0;
}

// ---------------------------------------------------------------- predict

struct PredictArgs {
    Common common;
    std::string bundle;
    std::string corpus;
    std::string record;
    std::string vocab;
    std::string scenes;
    std::string features;
    std::string out;
    bool cross = false;
    bool skip_missing = false;
};

int run_predict(const PredictArgs& a) {
    const auto bundle = load_bundle(a.bundle);
    const auto features = load_features(a.features);
    char* text = nullptr;
    if(!a.record.empty()) {
        check(borm_predict_record(bundle.get(), a.record.c_str(), features.get(), &text));
    } else {
        const auto corpus = load_corpus_for_bundle(bundle.get(), a.corpus, a.vocab, a.scenes);
        borm_eval_options eo;
        borm_eval_options_default(&eo);
        eo.cross = a.cross ? 1 : 0;
        eo.skip_missing = a.skip_missing ? 1 : 0;
        eo.threads = a.common.threads;
        check(borm_predict_corpus(bundle.get(), corpus.get(), features.get(), &eo, &text));
    }
    const std::string doc_text = take(text);
    std::string rendered = doc_text;
    if(!a.common.json) {
        const json doc = json::parse(doc_text);
        std::ostringstream os;
        os << "image_id\tscene\tprobability\n";
        for(const auto& p : doc["predictions"]) {
            const auto k = p["scene_index"].get<std::size_t>();
            char prob[32];
            std::snprintf(prob, sizeof(prob), "%.6f", p["probabilities"][k].get<double>());
            os << p["image_id"].get<std::string>() << '\t' << p["scene"].get<std::string>() << '\t' << prob << '\n';
        }
        for(const auto& s : doc["skipped"])
            std::fprintf(stderr, "skipped %s: no scene feature\n", s.get<std::string>().c_str());
        rendered = os.str();
    }
    if(!a.out.empty())
        write_text(a.out, rendered);
    json config = {{"bundle", a.bundle}, {"corpus", a.corpus},     {"record", a.record},
                   {"vocab", a.vocab},   {"scenes", a.scenes},     {"features", a.features},
                   {"out", a.out},       {"cross", a.cross},       {"skip_missing", a.skip_missing}};
    write_sidecar("predict", a.common, a.out.empty() ? "" : a.out + ".run.json", config);
    std::cout << rendered;
    return 0;
}

// ---------------------------------------------------------------- inspect

struct InspectArgs {
    Common common;
    std::string stats;
    std::size_t top_pairs = 0;
    std::string pair;
    std::string object;
    std::string out;
};

std::size_t object_index(const borm_stats* stats, const std::string& name) {
    std::size_t k = 0;
    check(borm_stats_object_index(stats, name.c_str(), &k));
    return k;
}

std::string inspect_pair(const borm_stats* stats, const std::string& spec, bool as_json) {
    const auto comma = spec.find(',');
    if(comma == std::string::npos || spec.find(',', comma + 1) != std::string::npos)
        throw UsageFailure("--pair expects two object names separated by a comma");
    const std::string a = spec.substr(0, comma);
    const std::string b = spec.substr(comma + 1);
    const std::size_t h = object_index(stats, a);
    const std::size_t i = object_index(stats, b);
    std::vector<double> post(borm_stats_n_scenes(stats));
    check(borm_stats_posterior(stats, h, i, post.data(), post.size()));
    double dis = 0.0;
    check(borm_stats_dis(stats, h, i, &dis));
    if(as_json) {
        json scenes = json::array();
        for(std::size_t j = 0; j < post.size(); ++j)
            scenes.push_back({{"scene", borm_stats_scene_name(stats, j)}, {"posterior", post[j]}});
        return json{{"objects", {a, b}}, {"dis", dis}, {"posterior", std::move(scenes)}}.dump(2) + "\n";
    }
    std::ostringstream os;
    char line[64];
    std::snprintf(line, sizeof(line), "%.6f", dis);
    os << "pair " << a << "," << b << "  dis " << line << "\n";
    for(std::size_t j = 0; j < post.size(); ++j) {
        std::snprintf(line, sizeof(line), "%.6f", post[j]);
        os << "  " << borm_stats_scene_name(stats, j) << "\t" << line << "\n";
    }
    return os.str();
}

std::string inspect_top(const borm_stats* stats, std::size_t k, bool as_json) {
    char* text = nullptr;
    check(borm_stats_top_pairs(stats, k, &text));
    const std::string doc = take(text);
    if(as_json)
        return doc;
    std::ostringstream os;
    os << "rank\tpair\tdis\ttop_scene\tposterior\n";
    std::size_t rank = 1;
    for(const auto& p : json::parse(doc)) {
        char num[64];
        std::snprintf(num, sizeof(num), "%.6f\t%s\t%.6f", p["dis"].get<double>(),
                      p["top_scene"].get<std::string>().c_str(), p["top_posterior"].get<double>());
        os << rank++ << '\t' << p["objects"][0].get<std::string>() << ',' << p["objects"][1].get<std::string>()
           << '\t' << num << '\n';
    }
    return os.str();
}

std::string inspect_object(const borm_stats* stats, const std::string& name, bool as_json) {
    char* text = nullptr;
    check(borm_stats_object_profile(stats, object_index(stats, name), &text));
    const std::string doc = take(text);
    if(as_json)
        return doc;
    const json j = json::parse(doc);
    std::ostringstream os;
    os << "object " << name << "\n";
    for(const auto& s : j["scenes"]) {
        char num[64];
        std::snprintf(num, sizeof(num), "%.6f", s["conditional"].get<double>());
        os << "  " << s["scene"].get<std::string>() << "\t" << s["present"].get<std::uint64_t>() << "/"
           << s["images"].get<std::uint64_t>() << "\t" << num << "\n";
    }
    return os.str();
}

int run_inspect(const InspectArgs& a) {
    const auto stats = load_stats(a.stats);
    std::string rendered;
    if(!a.pair.empty()) {
        rendered = inspect_pair(stats.get(), a.pair, a.common.json);
    } else if(!a.object.empty()) {
        rendered = inspect_object(stats.get(), a.object, a.common.json);
    } else if(a.top_pairs > 0) {
        rendered = inspect_top(stats.get(), a.top_pairs, a.common.json);
    } else {
        char* text = nullptr;
        check(borm_stats_to_json(stats.get(), 0, &text));
        rendered = take(text);
    }
    if(!a.out.empty())
        write_text(a.out, rendered);
    json config = {
        {"stats", a.stats}, {"top_pairs", a.top_pairs}, {"pair", a.pair}, {"object", a.object}, {"out", a.out}};
    write_sidecar("inspect", a.common, a.out.empty() ? "" : a.out + ".run.json", config);
    std::cout << rendered;
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"borm: Bayesian object-relation scene recognition"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a TOML/INI file (command-line flags take precedence)");
    app.set_version_flag("--version", borm_version());

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "Generate a synthetic corpus");
    add_common(s, synth.common);
    auto* spec_opt = s->add_option("--spec", synth.spec, "Synth spec JSON file")->check(CLI::ExistingFile);
    auto* ps_opt = s->add_option("--pair-signal", synth.pair_signal, "Emit the pair-signal fixture split")
                       ->check(CLI::IsMember({"train", "test"}));
    spec_opt->excludes(ps_opt);
    s->add_option("--out", synth.out, "Output corpus JSONL")->required();
    s->add_option("--vocab", synth.vocab, "Output vocabulary file (default <out>.vocab.txt)");
    s->add_option("--scenes", synth.scenes, "Output scene list file (default <out>.scenes.txt)");

    FitArgs fit;
    auto* f = app.add_subcommand("fit-stats", "Fit co-occurrence statistics");
    add_common(f, fit.common);
    add_fit_flags(f, fit.fit);
    f->add_option("--corpus", fit.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    f->add_option("--vocab", fit.vocab, "Object vocabulary file")->required()->check(CLI::ExistingFile);
    f->add_option("--scenes", fit.scenes, "Scene list file")->required()->check(CLI::ExistingFile);
    f->add_option("--out", fit.out, "Output stats file")->required();
    f->add_option("--dump-features", fit.dump_features, "Also write BORM features of the corpus");

    TrainArgs train;
    auto* t = app.add_subcommand("train", "Train an IOM, BORM or CBORM model");
    add_common(t, train.common);
    add_fit_flags(t, train.fit);
    add_train_flags(t, train);
    t->add_option("--corpus", train.corpus, "Training corpus JSONL")->required()->check(CLI::ExistingFile);
    t->add_option("--vocab", train.vocab, "Object vocabulary file")->required()->check(CLI::ExistingFile);
    t->add_option("--scenes", train.scenes, "Scene list file")->required()->check(CLI::ExistingFile);
    t->add_option("--stats", train.stats, "Fitted stats (fitted from --corpus when omitted)")
        ->check(CLI::ExistingFile);
    t->add_option("--features", train.features, "Scene feature JSONL (CBORM)")->check(CLI::ExistingFile);
    t->add_option("--out", train.out, "Output bundle directory")->required();
    t->add_option("--eval-corpus", train.eval_corpus, "Evaluate the trained model on this corpus")
        ->check(CLI::ExistingFile);
    t->add_option("--format", train.format, "Report format")
        ->capture_default_str()
        ->check(CLI::IsMember({"text", "json", "csv"}));

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "Evaluate a trained bundle");
    add_common(e, ev.common);
    e->add_option("--bundle", ev.bundle, "Bundle directory")->required()->check(CLI::ExistingDirectory);
    e->add_option("--corpus", ev.corpus, "Corpus JSONL")->required()->check(CLI::ExistingFile);
    e->add_option("--vocab", ev.vocab, "Corpus vocabulary (default: the bundle's)")->check(CLI::ExistingFile);
    e->add_option("--scenes", ev.scenes, "Corpus scene list (default: the bundle's)")->check(CLI::ExistingFile);
    e->add_option("--features", ev.features, "Scene feature JSONL")->check(CLI::ExistingFile);
    e->add_option("--format", ev.format, "Report format")
        ->capture_default_str()
        ->check(CLI::IsMember({"text", "json", "csv"}));
    e->add_option("--out", ev.out, "Also write the report here");
    e->add_flag("--cross", ev.cross, "Map the corpus onto the bundle's labels by name");
    e->add_flag("--skip-missing", ev.skip_missing, "Skip records without scene features");

    PredictArgs pr;
    auto* p = app.add_subcommand("predict", "Per-image predictions");
    add_common(p, pr.common);
    p->add_option("--bundle", pr.bundle, "Bundle directory")->required()->check(CLI::ExistingDirectory);
    auto* pc = p->add_option("--corpus", pr.corpus, "Corpus JSONL")->check(CLI::ExistingFile);
    auto* prc = p->add_option("--record", pr.record, "A single corpus record as JSON");
    pc->excludes(prc);
    p->add_option("--vocab", pr.vocab, "Corpus vocabulary (default: the bundle's)")->check(CLI::ExistingFile);
    p->add_option("--scenes", pr.scenes, "Corpus scene list (default: the bundle's)")->check(CLI::ExistingFile);
    p->add_option("--features", pr.features, "Scene feature JSONL")->check(CLI::ExistingFile);
    p->add_option("--out", pr.out, "Also write predictions here");
    p->add_flag("--cross", pr.cross, "Map the corpus onto the bundle's labels by name");
    p->add_flag("--skip-missing", pr.skip_missing, "Skip records without scene features");

    InspectArgs in;
    auto* i = app.add_subcommand("inspect", "Query fitted statistics");
    add_common(i, in.common);
    i->add_option("--stats", in.stats, "Stats file")->required()->check(CLI::ExistingFile);
    auto* top = i->add_option("--top-pairs", in.top_pairs, "Show the K most discriminative pairs")
                    ->check(CLI::PositiveNumber);
    auto* pair = i->add_option("--pair", in.pair, "Posterior over scenes for a pair: name,name");
    auto* obj = i->add_option("--object", in.object, "Per-scene conditional for one object");
    top->excludes(pair)->excludes(obj);
    pair->excludes(obj);
    i->add_option("--out", in.out, "Also write the output here");

    try {
        app.parse(argc, argv);
    } catch(const CLI::CallForHelp& ex) {
        return app.exit(ex);
    } catch(const CLI::CallForAllHelp& ex) {
        return app.exit(ex);
    } catch(const CLI::CallForVersion& ex) {
        return app.exit(ex);
    } catch(const CLI::ParseError& ex) {
        std::cerr << "borm: usage error: " << ex.what() << "\n";
        return 1;
    }

    try {
        if(s->parsed()) {
            if(synth.spec.empty() && synth.pair_signal.empty())
                throw UsageFailure("synth needs --spec or --pair-signal");
            return run_synth(s, synth);
        }
        if(f->parsed())
            return run_fit(fit);
        if(t->parsed())
            return run_train(train);
        if(e->parsed())
            return run_eval(ev);
        if(p->parsed()) {
            if(pr.corpus.empty() && pr.record.empty())
                throw UsageFailure("predict needs --corpus or --record");
            return run_predict(pr);
        }
        if(i->parsed())
            return run_inspect(in);
    } catch(const UsageFailure& ex) {
        std::cerr << "borm: usage error: " << ex.what() << "\n";
        return 1;
    } catch(const RuntimeFailure& ex) {
        std::cerr << "borm: " << ex.what() << "\n";
        return 2;
    } catch(const std::exception& ex) {
        std::cerr << "borm: InternalError: " << ex.what() << "\n";
        return 2;
    }
    return 1;
}
