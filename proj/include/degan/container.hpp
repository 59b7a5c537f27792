// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace degan {

/// Base for every failure reading a container or text input.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

class ChecksumError : public FormatError {
public:
    using FormatError::FormatError;
};

class TruncatedError : public FormatError {
public:
    using FormatError::FormatError;
};

using Magic = std::array<char, 4>;

inline constexpr Magic kDatasetMagic{'G', 'G', 'A', 'N'};
inline constexpr Magic kCheckpointMagic{'G', 'G', 'P', 'M'};
inline constexpr Magic kSamplesMagic{'G', 'G', 'S', 'M'};
inline constexpr std::uint8_t kFormatVersion = 1;

/// Little-endian encoder. finish() appends the CRC-32 of everything written.
class ByteWriter {
public:
    ByteWriter(const Magic& magic, std::uint8_t version);

    void u8(std::uint8_t v) { buf_.push_back(v); }
    void u16(std::uint16_t v);
    void u32(std::uint32_t v);
    void u64(std::uint64_t v);
    void f64(double v);
    void bytes(std::span<const std::uint8_t> v);
    /// u32 length prefix then raw bytes.
    void str(const std::string& s);

    std::vector<std::uint8_t> finish() &&;

private:
    std::vector<std::uint8_t> buf_;
};

/// Verifies magic, version and checksum up front, then decodes the payload.
class ByteReader {
public:
    ByteReader(std::vector<std::uint8_t> data, const Magic& magic, std::uint8_t max_version);

    std::uint8_t version() const { return version_; }
    std::uint8_t u8();
    std::uint16_t u16();
    std::uint32_t u32();
    std::uint64_t u64();
    double f64();
    std::vector<std::uint8_t> bytes(std::size_t n);
    std::string str();
    bool at_end() const { return pos_ == end_; }

private:
    void need(std::size_t n) const;

    std::vector<std::uint8_t> data_;
    std::size_t pos_ = 0;
    std::size_t end_ = 0;
    std::uint8_t version_ = 0;
};

std::uint32_t crc32(std::span<const std::uint8_t> data);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> data);

}  // namespace degan
