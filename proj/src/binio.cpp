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

#include "borm/binio.hpp"

#include "borm/error.hpp"

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

namespace borm::binio {

std::uint64_t fnv1a64(std::span<const std::uint8_t> bytes) noexcept {
    std::uint64_t h = 14695981039346656037ULL;
    for(std::uint8_t b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    return h;
}

void Writer::put_u32(std::uint32_t v) {
    for(int k = 0; k < 4; ++k)
        buf_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void Writer::put_u64(std::uint64_t v) {
    for(int k = 0; k < 8; ++k)
        buf_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void Writer::put_f64(double v) { put_u64(std::bit_cast<std::uint64_t>(v)); }

void Writer::put_f64s(std::span<const double> values) {
    buf_.reserve(buf_.size() + 8 * values.size());
    for(double v : values)
        put_f64(v);
}

void Writer::put_string(std::string_view s) {
    put_u64(s.size());
    buf_.insert(buf_.end(), s.begin(), s.end());
}

void Writer::put_magic(std::string_view magic) { buf_.insert(buf_.end(), magic.begin(), magic.end()); }

void Writer::seal() { put_u64(fnv1a64(buf_)); }

void Reader::need(std::size_t n) const {
    if(n > remaining())
        throw Error(ErrorCode::kCorruptFile, "unexpected end of data");
}

std::uint8_t Reader::get_u8() {
    need(1);
    return bytes_[pos_++];
}

std::uint32_t Reader::get_u32() {
    need(4);
    std::uint32_t v = 0;
    for(int k = 0; k < 4; ++k)
        v |= static_cast<std::uint32_t>(bytes_[pos_ + k]) << (8 * k);
    pos_ += 4;
    return v;
}

std::uint64_t Reader::get_u64() {
    need(8);
    std::uint64_t v = 0;
    for(int k = 0; k < 8; ++k)
        v |= static_cast<std::uint64_t>(bytes_[pos_ + k]) << (8 * k);
    pos_ += 8;
    return v;
}

double Reader::get_f64() { return std::bit_cast<double>(get_u64()); }

void Reader::get_f64s(std::span<double> out) {
    need(8 * out.size());
    for(double& v : out)
        v = get_f64();
}

std::string Reader::get_string() {
    const std::size_t n = get_count(1);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
}

std::size_t Reader::get_count(std::size_t min_element_bytes) {
    const std::uint64_t n = get_u64();
    if(min_element_bytes > 0 && n > remaining() / min_element_bytes)
        throw Error(ErrorCode::kCorruptFile, "element count exceeds container size");
    return static_cast<std::size_t>(n);
}

Reader open_container(std::span<const std::uint8_t> bytes, std::string_view magic,
                      std::uint32_t supported_version, std::string_view what) {
    const std::size_t header = magic.size() + 4;
    if(bytes.size() < header || std::memcmp(bytes.data(), magic.data(), magic.size()) != 0)
        throw Error(ErrorCode::kCorruptFile, std::string(what) + ": bad magic bytes");
    Reader head(bytes.subspan(magic.size(), 4));
    const std::uint32_t version = head.get_u32();
    if(version != supported_version)
        throw Error(ErrorCode::kUnsupportedVersion,
                    std::string(what) + ": format version " + std::to_string(version) + " (supported: " +
                        std::to_string(supported_version) + ")");
    if(bytes.size() < header + 8)
        throw Error(ErrorCode::kCorruptFile, std::string(what) + ": truncated");
    const auto body = bytes.first(bytes.size() - 8);
    Reader tail(bytes.last(8));
    if(tail.get_u64() != fnv1a64(body))
        throw Error(ErrorCode::kCorruptFile, std::string(what) + ": checksum mismatch");
    return Reader(body.subspan(header));
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if(!in)
        throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for reading");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if(!out)
        throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if(!out)
        throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace borm::binio
