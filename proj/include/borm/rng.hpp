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

#include <cstdint>

namespace borm {

/// SplitMix64 stream. All randomness in the library (initialization, batch
/// shuffling, corpus splitting, synthetic generation) flows through this so a
/// seed fully determines a run.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1) with 53 bits of resolution.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n) by rejection; n must be > 0.
    std::uint64_t below(std::uint64_t n) noexcept {
        const std::uint64_t limit = max() - max() % n;
        std::uint64_t x;
        do {
            x = (*this)();
        } while(x >= limit);
        return x % n;
    }

private:
    std::uint64_t state_;
};

/// Derives an independent stream seed from a base seed and a tag.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    SplitMix64 g(seed ^ (tag * 0xd1342543de82ef95ULL));
    g();
    return g();
}

/// Fisher-Yates over any random-access range using SplitMix64::below, so the
/// permutation does not depend on the standard library's shuffle algorithm.
template <typename Range>
void deterministic_shuffle(Range& r, SplitMix64& g) {
    using std::swap;
    const auto n = static_cast<std::uint64_t>(r.size());
    for(std::uint64_t i = n; i > 1; --i) {
        const std::uint64_t j = g.below(i);
        swap(r[i - 1], r[j]);
    }
}

} // namespace borm
