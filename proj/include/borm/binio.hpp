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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace borm::binio {

/// FNV-1a over a byte range; used as the trailing checksum of every binary
/// container written by this library.
std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept;

/// Little-endian append-only buffer.
class Writer {
public:
    void put_u8(std::uint8_t v) { buf_.push_back(v); }
    void put_u32(std::uint32_t v);
    void put_u64(std::uint64_t v);
    void put_i64(std::int64_t v) { put_u64(static_cast<std::uint64_t>(v)); }
    void put_f64(double v);
    void put_f64s(std::span<const double> values);
    void put_string(std::string_view s);
    void put_magic(std::string_view magic);

    /// Appends the checksum of everything written so far.
    void seal();

    const std::vector<std::uint8_t>& bytes() const noexcept { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

/// Bounds-checked little-endian reader. Running off the end throws
/// CorruptFile, since every container is length-implied by its header.
class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t get_u8();
    std::uint32_t get_u32();
    std::uint64_t get_u64();
    std::int64_t get_i64() { return static_cast<std::int64_t>(get_u64()); }
    double get_f64();
    void get_f64s(std::span<double> out);
    std::string get_string();
    /// Reads an element count and rejects values that cannot fit in the rest of
    /// the buffer at `min_element_bytes` each.
    std::size_t get_count(std::size_t min_element_bytes);

    std::size_t position() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    void need(std::size_t n) const;

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

/// Checks magic, then version, then checksum, in that order, and returns a
/// reader positioned just after the version field with the checksum trimmed.
Reader open_container(std::span<const std::uint8_t> bytes, std::string_view magic,
                      std::uint32_t supported_version, std::string_view what);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

std::string hex64(std::uint64_t v);

} // namespace borm::binio
