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

// Shared helpers for the test binaries: fixture paths, random corpora and an
// independent brute-force implementation of the co-occurrence statistics.

#pragma once

#include "borm/bayes.hpp"
#include "borm/corpus.hpp"
#include "borm/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

namespace borm_test {

inline std::filesystem::path data_dir() { return std::filesystem::path(BORM_TEST_DATA_DIR); }

inline borm::Corpus toy_corpus() {
    const auto dir = data_dir() / "toy";
    return borm::load_corpus(dir / "corpus.jsonl", borm::load_vocab(dir / "vocab.txt"),
                             borm::load_scene_labels(dir / "scenes.txt"));
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("borm_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline std::vector<std::string> numbered(const std::string& prefix, std::size_t n) {
    std::vector<std::string> out;
    for(std::size_t k = 0; k < n; ++k)
        out.push_back(prefix + std::to_string(k));
    return out;
}

// Random corpus where every scene has at least one image.
inline borm::Corpus random_corpus(std::uint64_t seed, std::size_t max_objs, std::size_t max_scenes,
                                  std::size_t max_images) {
    borm::SplitMix64 g(seed);
    const std::size_t n = 1 + g.below(max_objs);
    const std::size_t s = 1 + g.below(max_scenes);
    const std::size_t images = s + g.below(max_images - s + 1);
    const double density = 0.1 + 0.8 * g.uniform();
    borm::Corpus c{borm::ObjectVocabulary(numbered("o", n)), borm::SceneLabelSet(numbered("s", s)), {}};
    for(std::size_t k = 0; k < images; ++k) {
        const std::size_t scene = k < s ? k : g.below(s);
        std::vector<std::size_t> objs;
        for(std::size_t o = 0; o < n; ++o)
            if(g.uniform() < density)
                objs.push_back(o);
        c.records.push_back(borm::make_record("img" + std::to_string(k), scene, std::move(objs), n, s));
    }
    return c;
}

struct OracleStats {
    std::size_t n = 0;
    std::size_t s = 0;
    std::vector<double> priors;
    std::vector<std::vector<double>> conditional;            // [object][scene]
    std::vector<std::vector<std::vector<double>>> posterior; // [h][i][scene]
    std::vector<std::vector<double>> dis;                    // [h][i]
};

// Straight transcription of the model: counts are recomputed by scanning the
// records for every quantity, with no shared tables.
inline OracleStats oracle_stats(const borm::Corpus& c, const borm::FitOptions& opt) {
    OracleStats o;
    o.n = c.n_objs();
    o.s = c.n_scenes();
    const double eps = opt.smoothing;
    auto has = [](const borm::ImageRecord& r, std::size_t obj) {
        return std::find(r.objects.begin(), r.objects.end(), obj) != r.objects.end();
    };
    auto images_in = [&](std::size_t j) {
        double k = 0;
        for(const auto& r : c.records)
            k += r.scene == j ? 1 : 0;
        return k;
    };
    for(std::size_t j = 0; j < o.s; ++j)
        o.priors.push_back(opt.uniform_prior ? 1.0 / double(o.s) : images_in(j) / double(c.records.size()));
    o.conditional.assign(o.n, std::vector<double>(o.s));
    for(std::size_t i = 0; i < o.n; ++i)
        for(std::size_t j = 0; j < o.s; ++j) {
            double k = 0;
            for(const auto& r : c.records)
                k += (r.scene == j && has(r, i)) ? 1 : 0;
            o.conditional[i][j] = (k + eps) / (images_in(j) + 2 * eps);
        }
    o.posterior.assign(o.n, std::vector<std::vector<double>>(o.n, std::vector<double>(o.s)));
    o.dis.assign(o.n, std::vector<double>(o.n));
    for(std::size_t h = 0; h < o.n; ++h)
        for(std::size_t i = 0; i < o.n; ++i) {
            std::vector<double> w(o.s);
            double z = 0;
            for(std::size_t j = 0; j < o.s; ++j) {
                double joint;
                if(opt.joint == borm::JointEstimator::kIndependent) {
                    joint = o.conditional[h][j] * o.conditional[i][j];
                } else if(h == i) {
                    joint = o.conditional[h][j];
                } else {
                    double k = 0;
                    for(const auto& r : c.records)
                        k += (r.scene == j && has(r, h) && has(r, i)) ? 1 : 0;
                    joint = (k + eps) / (images_in(j) + 4 * eps);
                }
                w[j] = joint * o.priors[j];
                z += w[j];
            }
            if(z == 0) {
                std::fill(o.posterior[h][i].begin(), o.posterior[h][i].end(), 1.0 / double(o.s));
                o.dis[h][i] = 0;
                continue;
            }
            double mean = 0;
            for(std::size_t j = 0; j < o.s; ++j) {
                o.posterior[h][i][j] = w[j] / z;
                mean += o.posterior[h][i][j] / double(o.s);
            }
            double var = 0;
            for(std::size_t j = 0; j < o.s; ++j)
                var += (o.posterior[h][i][j] - mean) * (o.posterior[h][i][j] - mean) / double(o.s);
            o.dis[h][i] = std::sqrt(var);
        }
    return o;
}

// Largest absolute difference between fitted stats and the oracle.
inline double oracle_max_error(const borm::CooccurrenceStats& st, const OracleStats& o) {
    double err = 0;
    auto upd = [&](double a, double b) { err = std::max(err, std::abs(a - b)); };
    for(std::size_t j = 0; j < o.s; ++j)
        upd(st.priors[j], o.priors[j]);
    for(std::size_t i = 0; i < o.n; ++i)
        for(std::size_t j = 0; j < o.s; ++j)
            upd(st.conditional_at(i, j), o.conditional[i][j]);
    for(std::size_t h = 0; h < o.n; ++h)
        for(std::size_t i = 0; i < o.n; ++i) {
            upd(st.dis_at(h, i), o.dis[h][i]);
            const auto p = st.posterior_at(h, i);
            for(std::size_t j = 0; j < o.s; ++j)
                upd(p[j], o.posterior[h][i][j]);
        }
    return err;
}

} // namespace borm_test
