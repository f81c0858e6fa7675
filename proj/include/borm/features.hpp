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

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace borm {

/// Binary object-occurrence vector; bit i is set iff object i is present.
struct IomVector {
    std::vector<std::uint8_t> bits;

    std::size_t size() const noexcept { return bits.size(); }
    friend bool operator==(const IomVector&, const IomVector&) = default;
};

/// Outer product of an occurrence vector with itself, row-major n x n.
struct OrmMatrix {
    std::size_t n = 0;
    std::vector<std::uint8_t> cells;

    std::uint8_t at(std::size_t h, std::size_t i) const { return cells[h * n + i]; }
    friend bool operator==(const OrmMatrix&, const OrmMatrix&) = default;
};

/// Relation matrix weighted by dis, flattened row-major: values[h * n + i].
struct BormFeature {
    std::vector<double> values;
};

IomVector iom_vector(const ImageRecord& record, std::size_t n_objs);
OrmMatrix orm_matrix(const IomVector& v);
BormFeature borm_feature(const OrmMatrix& m, const CooccurrenceStats& stats);

/// Writes the BORM feature of `record` straight into `out` (length n_objs^2)
/// without materializing the relation matrix. Same values as
/// borm_feature(orm_matrix(iom_vector(record))).
void borm_feature_into(const ImageRecord& record, const CooccurrenceStats& stats, std::span<double> out);

/// Occurrence vector as reals, for feeding a network.
void iom_input_into(const ImageRecord& record, std::size_t n_objs, std::span<double> out);

/// Feature dump: one JSON header line, then `count` rows of n_objs^2
/// little-endian doubles.
void write_feature_dump(const std::filesystem::path& path, const Corpus& corpus, const CooccurrenceStats& stats);

struct FeatureDump {
    std::size_t n_objs = 0;
    std::vector<std::string> image_ids;
    std::vector<std::vector<double>> rows;
};

FeatureDump read_feature_dump(const std::filesystem::path& path);

} // namespace borm
