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

#include "borm/features.hpp"

#include "borm/binio.hpp"
#include "borm/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <bit>
#include <cstring>

namespace borm {

IomVector iom_vector(const ImageRecord& record, std::size_t n_objs) {
    IomVector v{std::vector<std::uint8_t>(n_objs, 0)};
    for(std::size_t o : record.objects) {
        if(o >= n_objs)
            throw Error(ErrorCode::kIndex, "object index " + std::to_string(o) + " >= " + std::to_string(n_objs));
        v.bits[o] = 1;
    }
    return v;
}

OrmMatrix orm_matrix(const IomVector& v) {
    const std::size_t n = v.size();
    OrmMatrix m{n, std::vector<std::uint8_t>(n * n, 0)};
    for(std::size_t h = 0; h < n; ++h)
        if(v.bits[h])
            for(std::size_t i = 0; i < n; ++i)
                m.cells[h * n + i] = v.bits[i];
    return m;
}

BormFeature borm_feature(const OrmMatrix& m, const CooccurrenceStats& stats) {
    if(m.n != stats.n_objs)
        throw Error(ErrorCode::kDimMismatch, "relation matrix is " + std::to_string(m.n) + "x" + std::to_string(m.n) +
                                                 ", stats have " + std::to_string(stats.n_objs) + " objects");
    BormFeature f{std::vector<double>(m.n * m.n, 0.0)};
    for(std::size_t k = 0; k < f.values.size(); ++k)
        if(m.cells[k])
            f.values[k] = stats.dis[k];
    return f;
}

void borm_feature_into(const ImageRecord& record, const CooccurrenceStats& stats, std::span<double> out) {
    const std::size_t n = stats.n_objs;
    if(out.size() != n * n)
        throw Error(ErrorCode::kDimMismatch, "output buffer length " + std::to_string(out.size()));
    std::fill(out.begin(), out.end(), 0.0);
    for(std::size_t h : record.objects) {
        if(h >= n)
            throw Error(ErrorCode::kIndex, "object index " + std::to_string(h) + " >= " + std::to_string(n));
        for(std::size_t i : record.objects)
            out[h * n + i] = stats.dis[h * n + i];
    }
}

void iom_input_into(const ImageRecord& record, std::size_t n_objs, std::span<double> out) {
    if(out.size() != n_objs)
        throw Error(ErrorCode::kDimMismatch, "output buffer length " + std::to_string(out.size()));
    std::fill(out.begin(), out.end(), 0.0);
    for(std::size_t o : record.objects) {
        if(o >= n_objs)
            throw Error(ErrorCode::kIndex, "object index " + std::to_string(o) + " >= " + std::to_string(n_objs));
        out[o] = 1.0;
    }
}

void write_feature_dump(const std::filesystem::path& path, const Corpus& corpus, const CooccurrenceStats& stats) {
    if(corpus.n_objs() != stats.n_objs)
        throw Error(ErrorCode::kDimMismatch, "corpus and stats disagree on object count");
    nlohmann::json header = {{"format", "borm-features"},
                             {"n_objs", stats.n_objs},
                             {"count", corpus.records.size()},
                             {"flattening", "row-major"},
                             {"dtype", "f64le"}};
    std::vector<std::string> ids;
    for(const auto& r : corpus.records)
        ids.push_back(r.image_id);
    header["image_ids"] = ids;
    const std::string head = header.dump() + "\n";
    binio::Writer w;
    std::vector<double> row(stats.n_objs * stats.n_objs);
    std::vector<std::uint8_t> out(head.begin(), head.end());
    for(const auto& r : corpus.records) {
        borm_feature_into(r, stats, row);
        w.put_f64s(row);
    }
    out.insert(out.end(), w.bytes().begin(), w.bytes().end());
    binio::write_file(path, out);
}

FeatureDump read_feature_dump(const std::filesystem::path& path) {
    const auto bytes = binio::read_file(path);
    const auto nl = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
    if(nl == bytes.end())
        throw Error(ErrorCode::kParse, "feature dump: missing header line");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.begin(), nl);
    } catch(const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kParse, std::string("feature dump header: ") + e.what());
    }
    FeatureDump dump;
    dump.n_objs = header.at("n_objs").get<std::size_t>();
    const auto count = header.at("count").get<std::size_t>();
    dump.image_ids = header.at("image_ids").get<std::vector<std::string>>();
    const std::size_t width = dump.n_objs * dump.n_objs;
    const std::size_t offset = static_cast<std::size_t>(nl - bytes.begin()) + 1;
    if(bytes.size() - offset != count * width * 8 || dump.image_ids.size() != count)
        throw Error(ErrorCode::kCorruptFile, "feature dump: body size does not match header");
    binio::Reader r(std::span<const std::uint8_t>(bytes).subspan(offset));
    dump.rows.assign(count, std::vector<double>(width));
    for(auto& row : dump.rows)
        r.get_f64s(row);
    return dump;
}

} // namespace borm
