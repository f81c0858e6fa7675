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

#include "borm/bayes.hpp"

#include "borm/binio.hpp"
#include "borm/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <thread>

namespace borm {

namespace {

constexpr std::uint32_t kStatsVersion = 1;
constexpr std::string_view kStatsMagic = "BORM";

struct Counts {
    std::vector<std::uint64_t> images;
    std::vector<std::uint64_t> presence;
    std::vector<std::uint64_t> pairs;
};

void count_range(const Corpus& corpus, std::size_t begin, std::size_t end, bool with_pairs, Counts& out) {
    const std::size_t n = corpus.n_objs();
    const std::size_t s = corpus.n_scenes();
    out.images.assign(s, 0);
    out.presence.assign(n * s, 0);
    out.pairs.assign(with_pairs ? n * n * s : 0, 0);
    for(std::size_t r = begin; r < end; ++r) {
        const auto& rec = corpus.records[r];
        ++out.images[rec.scene];
        for(std::size_t o : rec.objects)
            ++out.presence[o * s + rec.scene];
        if(with_pairs)
            for(std::size_t a : rec.objects)
                for(std::size_t b : rec.objects)
                    ++out.pairs[(a * n + b) * s + rec.scene];
    }
}

// Integer counts make the reduction order irrelevant, so any thread count
// produces identical statistics.
Counts count_corpus(const Corpus& corpus, bool with_pairs, unsigned threads) {
    const std::size_t n_rec = corpus.records.size();
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n_rec / 256 + 1));
    std::vector<Counts> parts(workers);
    std::vector<std::thread> pool;
    for(std::size_t w = 0; w < workers; ++w) {
        const std::size_t begin = n_rec * w / workers;
        const std::size_t end = n_rec * (w + 1) / workers;
        if(workers == 1)
            count_range(corpus, begin, end, with_pairs, parts[w]);
        else
            pool.emplace_back(count_range, std::cref(corpus), begin, end, with_pairs, std::ref(parts[w]));
    }
    for(auto& t : pool)
        t.join();
    Counts total = std::move(parts[0]);
    for(std::size_t w = 1; w < workers; ++w) {
        std::transform(total.images.begin(), total.images.end(), parts[w].images.begin(), total.images.begin(),
                       std::plus<>());
        std::transform(total.presence.begin(), total.presence.end(), parts[w].presence.begin(),
                       total.presence.begin(), std::plus<>());
        std::transform(total.pairs.begin(), total.pairs.end(), parts[w].pairs.begin(), total.pairs.begin(),
                       std::plus<>());
    }
    return total;
}

double joint_unchecked(const CooccurrenceStats& st, std::size_t h, std::size_t i, std::size_t j) {
    if(st.options.joint == JointEstimator::kEmpirical && h != i) {
        const double eps = st.options.smoothing;
        const double n = static_cast<double>(st.pair_counts[(h * st.n_objs + i) * st.n_scenes + j]);
        return (n + eps) / (static_cast<double>(st.image_counts[j]) + 4.0 * eps);
    }
    if(h == i && st.options.joint == JointEstimator::kEmpirical)
        return st.conditional_at(h, j);
    return st.conditional_at(h, j) * st.conditional_at(i, j);
}

void check_pair(const CooccurrenceStats& st, std::size_t h, std::size_t i) {
    if(h >= st.n_objs || i >= st.n_objs)
        throw Error(ErrorCode::kIndex, "object pair (" + std::to_string(h) + ", " + std::to_string(i) +
                                           ") out of range for " + std::to_string(st.n_objs) + " objects");
}

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(),
                      [](double x, double y) { return std::bit_cast<std::uint64_t>(x) == std::bit_cast<std::uint64_t>(y); });
}

} // namespace

const char* joint_estimator_name(JointEstimator e) noexcept {
    return e == JointEstimator::kEmpirical ? "empirical" : "independent";
}

JointEstimator parse_joint_estimator(const std::string& name) {
    if(name == "independent")
        return JointEstimator::kIndependent;
    if(name == "empirical")
        return JointEstimator::kEmpirical;
    throw Error(ErrorCode::kConfig, "unknown joint estimator '" + name + "'");
}

bool operator==(const CooccurrenceStats& a, const CooccurrenceStats& b) {
    return a.n_objs == b.n_objs && a.n_scenes == b.n_scenes && a.options.uniform_prior == b.options.uniform_prior &&
           std::bit_cast<std::uint64_t>(a.options.smoothing) == std::bit_cast<std::uint64_t>(b.options.smoothing) &&
           a.options.joint == b.options.joint && a.object_names == b.object_names &&
           a.scene_names == b.scene_names && a.image_counts == b.image_counts &&
           a.presence_counts == b.presence_counts && a.pair_counts == b.pair_counts && same_bits(a.priors, b.priors) &&
           same_bits(a.conditional, b.conditional) && same_bits(a.posterior, b.posterior) && same_bits(a.dis, b.dis) &&
           a.defined == b.defined;
}

CooccurrenceStats fit_stats(const Corpus& corpus, const FitOptions& options) {
    if(!(options.smoothing >= 0.0) || !std::isfinite(options.smoothing))
        throw Error(ErrorCode::kConfig, "smoothing must be a finite value >= 0");
    validate_corpus(corpus);
    const std::size_t n = corpus.n_objs();
    const std::size_t s = corpus.n_scenes();

    CooccurrenceStats st;
    st.n_objs = n;
    st.n_scenes = s;
    st.options = options;
    st.options.threads = 1;
    st.object_names = corpus.vocab.names();
    st.scene_names = corpus.scenes.names();

    Counts counts = count_corpus(corpus, options.joint == JointEstimator::kEmpirical, std::max(1u, options.threads));
    for(std::size_t j = 0; j < s; ++j)
        if(counts.images[j] == 0)
            throw Error(ErrorCode::kEmptyScene, "scene '" + corpus.scenes.name(j) + "' has no images");
    st.image_counts = std::move(counts.images);
    st.presence_counts = std::move(counts.presence);
    st.pair_counts = std::move(counts.pairs);

    const double total = static_cast<double>(corpus.records.size());
    st.priors.resize(s);
    for(std::size_t j = 0; j < s; ++j)
        st.priors[j] = options.uniform_prior ? 1.0 / static_cast<double>(s)
                                             : static_cast<double>(st.image_counts[j]) / total;

    const double eps = options.smoothing;
    st.conditional.resize(n * s);
    for(std::size_t i = 0; i < n; ++i)
        for(std::size_t j = 0; j < s; ++j)
            st.conditional[i * s + j] = (static_cast<double>(st.presence_counts[i * s + j]) + eps) /
                                        (static_cast<double>(st.image_counts[j]) + 2.0 * eps);

    st.posterior.assign(n * n * s, 0.0);
    st.dis.assign(n * n, 0.0);
    st.defined.assign(n * n, 0);
    std::vector<double> weighted(s);
    const double uniform = 1.0 / static_cast<double>(s);
    for(std::size_t h = 0; h < n; ++h) {
        for(std::size_t i = h; i < n; ++i) {
            double evidence = 0.0;
            for(std::size_t j = 0; j < s; ++j) {
                weighted[j] = joint_unchecked(st, h, i, j) * st.priors[j];
                evidence += weighted[j];
            }
            double* post = st.posterior.data() + (h * n + i) * s;
            double spread = 0.0;
            const bool ok = evidence > 0.0;
            if(ok) {
                for(std::size_t j = 0; j < s; ++j)
                    post[j] = weighted[j] / evidence;
                double mean = 0.0;
                for(std::size_t j = 0; j < s; ++j)
                    mean += post[j];
                mean /= static_cast<double>(s);
                double var = 0.0;
                for(std::size_t j = 0; j < s; ++j)
                    var += (post[j] - mean) * (post[j] - mean);
                spread = std::sqrt(var / static_cast<double>(s));
            } else {
                std::fill(post, post + s, uniform);
            }
            std::copy(post, post + s, st.posterior.data() + (i * n + h) * s);
            st.dis[h * n + i] = st.dis[i * n + h] = spread;
            st.defined[h * n + i] = st.defined[i * n + h] = ok ? 1 : 0;
        }
    }
    return st;
}

double joint_conditional(const CooccurrenceStats& stats, std::size_t h, std::size_t i, std::size_t j) {
    check_pair(stats, h, i);
    if(j >= stats.n_scenes)
        throw Error(ErrorCode::kIndex, "scene index " + std::to_string(j) + " out of range");
    // Canonical order keeps the empirical lookup symmetric as well.
    return joint_unchecked(stats, std::min(h, i), std::max(h, i), j);
}

std::vector<double> posterior(const CooccurrenceStats& stats, std::size_t h, std::size_t i) {
    check_pair(stats, h, i);
    const auto p = stats.posterior_at(h, i);
    return {p.begin(), p.end()};
}

double discriminative_value(const CooccurrenceStats& stats, std::size_t h, std::size_t i) {
    check_pair(stats, h, i);
    return stats.dis_at(h, i);
}

std::vector<PairScore> top_pairs(const CooccurrenceStats& stats, std::size_t k) {
    if(k == 0)
        throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
    std::vector<PairScore> all;
    all.reserve(stats.n_objs * (stats.n_objs + 1) / 2);
    for(std::size_t h = 0; h < stats.n_objs; ++h) {
        for(std::size_t i = h; i < stats.n_objs; ++i) {
            const auto p = stats.posterior_at(h, i);
            const auto top = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
            all.push_back({h, i, stats.dis_at(h, i), top});
        }
    }
    // `all` is already in (h, i) order, so a stable sort on dis keeps ties lexicographic.
    std::stable_sort(all.begin(), all.end(), [](const PairScore& a, const PairScore& b) { return a.dis > b.dis; });
    if(all.size() > k)
        all.resize(k);
    return all;
}

std::vector<std::uint8_t> serialize_stats(const CooccurrenceStats& st) {
    binio::Writer w;
    w.put_magic(kStatsMagic);
    w.put_u32(kStatsVersion);
    w.put_u64(st.n_objs);
    w.put_u64(st.n_scenes);
    w.put_u8(static_cast<std::uint8_t>(st.options.joint));
    w.put_u8(st.options.uniform_prior ? 1 : 0);
    w.put_f64(st.options.smoothing);
    for(const auto& name : st.object_names)
        w.put_string(name);
    for(const auto& name : st.scene_names)
        w.put_string(name);
    for(auto c : st.image_counts)
        w.put_u64(c);
    for(auto c : st.presence_counts)
        w.put_u64(c);
    w.put_u8(st.pair_counts.empty() ? 0 : 1);
    for(auto c : st.pair_counts)
        w.put_u64(c);
    w.put_f64s(st.priors);
    w.put_f64s(st.conditional);
    w.put_f64s(st.posterior);
    w.put_f64s(st.dis);
    for(auto d : st.defined)
        w.put_u8(d);
    w.seal();
    return w.bytes();
}

CooccurrenceStats deserialize_stats(std::span<const std::uint8_t> bytes) {
    binio::Reader r = binio::open_container(bytes, kStatsMagic, kStatsVersion, "stats file");
    CooccurrenceStats st;
    st.n_objs = r.get_count(8);
    st.n_scenes = r.get_count(8);
    if(st.n_objs == 0 || st.n_scenes == 0)
        throw Error(ErrorCode::kCorruptFile, "stats file: zero dimension");
    const std::uint8_t joint = r.get_u8();
    if(joint > 1)
        throw Error(ErrorCode::kCorruptFile, "stats file: unknown joint estimator");
    st.options.joint = static_cast<JointEstimator>(joint);
    st.options.uniform_prior = r.get_u8() != 0;
    st.options.smoothing = r.get_f64();
    for(std::size_t k = 0; k < st.n_objs; ++k)
        st.object_names.push_back(r.get_string());
    for(std::size_t k = 0; k < st.n_scenes; ++k)
        st.scene_names.push_back(r.get_string());
    const std::size_t n = st.n_objs;
    const std::size_t s = st.n_scenes;
    auto read_counts = [&](std::vector<std::uint64_t>& v, std::size_t count) {
        if(count > r.remaining() / 8)
            throw Error(ErrorCode::kCorruptFile, "stats file: truncated");
        v.resize(count);
        for(auto& c : v)
            c = r.get_u64();
    };
    auto read_reals = [&](std::vector<double>& v, std::size_t count) {
        if(count > r.remaining() / 8)
            throw Error(ErrorCode::kCorruptFile, "stats file: truncated");
        v.resize(count);
        r.get_f64s(v);
    };
    read_counts(st.image_counts, s);
    read_counts(st.presence_counts, n * s);
    const bool has_pairs = r.get_u8() != 0;
    read_counts(st.pair_counts, has_pairs ? n * n * s : 0);
    read_reals(st.priors, s);
    read_reals(st.conditional, n * s);
    read_reals(st.posterior, n * n * s);
    read_reals(st.dis, n * n);
    if(n * n > r.remaining())
        throw Error(ErrorCode::kCorruptFile, "stats file: truncated");
    st.defined.resize(n * n);
    for(auto& d : st.defined)
        d = r.get_u8();
    if(r.remaining() != 0)
        throw Error(ErrorCode::kCorruptFile, "stats file: trailing bytes");
    if(has_pairs != (st.options.joint == JointEstimator::kEmpirical))
        throw Error(ErrorCode::kCorruptFile, "stats file: pair counts inconsistent with estimator");
    return st;
}

void save_stats(const CooccurrenceStats& stats, const std::filesystem::path& path) {
    binio::write_file(path, serialize_stats(stats));
}

CooccurrenceStats load_stats(const std::filesystem::path& path) { return deserialize_stats(binio::read_file(path)); }

std::string stats_id(const CooccurrenceStats& stats) { return binio::hex64(binio::fnv1a64(serialize_stats(stats))); }

std::string stats_to_json(const CooccurrenceStats& st, bool include_tensors) {
    using json = nlohmann::json;
    const std::size_t n = st.n_objs;
    const std::size_t s = st.n_scenes;
    json j;
    j["format"] = "borm-stats";
    j["version"] = kStatsVersion;
    j["n_objs"] = n;
    j["n_scenes"] = s;
    j["joint_estimator"] = joint_estimator_name(st.options.joint);
    j["uniform_prior"] = st.options.uniform_prior;
    j["smoothing"] = st.options.smoothing;
    j["objects"] = st.object_names;
    j["scenes"] = st.scene_names;
    j["image_counts"] = st.image_counts;
    j["priors"] = st.priors;
    json cond = json::array();
    for(std::size_t i = 0; i < n; ++i)
        cond.push_back(std::vector<double>(st.conditional.begin() + i * s, st.conditional.begin() + (i + 1) * s));
    j["conditional"] = std::move(cond);
    if(include_tensors) {
        json dis = json::array();
        json post = json::array();
        for(std::size_t h = 0; h < n; ++h) {
            dis.push_back(std::vector<double>(st.dis.begin() + h * n, st.dis.begin() + (h + 1) * n));
            json row = json::array();
            for(std::size_t i = 0; i < n; ++i) {
                const auto p = st.posterior_at(h, i);
                row.push_back(std::vector<double>(p.begin(), p.end()));
            }
            post.push_back(std::move(row));
        }
        j["dis"] = std::move(dis);
        j["posterior"] = std::move(post);
    }
    return j.dump(2);
}

} // namespace borm
