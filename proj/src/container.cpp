// SPDX-License-Identifier: Apache-2.0
#include "degan/container.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <zlib.h>

namespace degan {

ByteWriter::ByteWriter(const Magic& magic, std::uint8_t version) {
    buf_.insert(buf_.end(), magic.begin(), magic.end());
    buf_.push_back(version);
}

void ByteWriter::u16(std::uint16_t v) {
    for (int k = 0; k < 2; ++k) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void ByteWriter::u32(std::uint32_t v) {
    for (int k = 0; k < 4; ++k) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void ByteWriter::u64(std::uint64_t v) {
    for (int k = 0; k < 8; ++k) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}

void ByteWriter::f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }

void ByteWriter::bytes(std::span<const std::uint8_t> v) { buf_.insert(buf_.end(), v.begin(), v.end()); }

void ByteWriter::str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
}

std::vector<std::uint8_t> ByteWriter::finish() && {
    u32(crc32(buf_));
    return std::move(buf_);
}

ByteReader::ByteReader(std::vector<std::uint8_t> data, const Magic& magic, std::uint8_t max_version)
    : data_(std::move(data)) {
    if (data_.size() < magic.size() + 1 + 4) throw TruncatedError("container shorter than its framing");
    if (std::memcmp(data_.data(), magic.data(), magic.size()) != 0)
        throw FormatError("bad magic bytes, expected '" + std::string(magic.begin(), magic.end()) + "'");
    version_ = data_[magic.size()];
    if (version_ == 0 || version_ > max_version)
        throw VersionError("unsupported container version " + std::to_string(version_));
    end_ = data_.size() - 4;
    std::uint32_t stored = 0;
    for (int k = 0; k < 4; ++k) stored |= static_cast<std::uint32_t>(data_[end_ + k]) << (8 * k);
    if (stored != crc32(std::span(data_).first(end_))) throw ChecksumError("container checksum mismatch");
    pos_ = magic.size() + 1;
}

void ByteReader::need(std::size_t n) const {
    if (end_ - pos_ < n) throw TruncatedError("container payload truncated");
}

std::uint8_t ByteReader::u8() {
    need(1);
    return data_[pos_++];
}

std::uint16_t ByteReader::u16() {
    need(2);
    std::uint16_t v = 0;
    for (int k = 0; k < 2; ++k) v |= static_cast<std::uint16_t>(data_[pos_++] << (8 * k));
    return v;
}

std::uint32_t ByteReader::u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(data_[pos_++]) << (8 * k);
    return v;
}

std::uint64_t ByteReader::u64() {
    need(8);
    std::uint64_t v = 0;
    for (int k = 0; k < 8; ++k) v |= static_cast<std::uint64_t>(data_[pos_++]) << (8 * k);
    return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::vector<std::uint8_t> ByteReader::bytes(std::size_t n) {
    need(n);
    std::vector<std::uint8_t> out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                  data_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return out;
}

std::string ByteReader::str() {
    const auto n = u32();
    auto raw = bytes(n);
    return std::string(raw.begin(), raw.end());
}

std::uint32_t crc32(std::span<const std::uint8_t> data) {
    uLong crc = ::crc32(0L, Z_NULL, 0);
    // zlib takes uInt lengths; feed in chunks.
    std::size_t off = 0;
    while (off < data.size()) {
        const auto chunk = static_cast<uInt>(std::min<std::size_t>(data.size() - off, 1u << 30));
        crc = ::crc32(crc, data.data() + off, chunk);
        off += chunk;
    }
    return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace degan
