#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace travel::container {

// Single-file binary container:
//   magic (4 bytes) | version u32 LE | header length u64 LE | JSON header |
//   payload sections | CRC32 (u32 LE, over all preceding bytes)
// Section layout is dictated entirely by the JSON header, so readers consume
// sections in the same order writers emitted them.

class Writer {
public:
    Writer(std::array<char, 4> magic, std::uint32_t version);

    void set_header(const std::string& json);
    void append_f64(std::span<const double> values);
    void append_i64(std::span<const std::int64_t> values);
    void append_u8(std::span<const std::uint8_t> values);

    std::vector<std::uint8_t> finish() const;  // full file image incl. checksum
    void write_file(const std::string& path) const;

private:
    std::array<char, 4> magic_;
    std::uint32_t version_;
    std::string header_;
    std::vector<std::uint8_t> payload_;
};

class Reader {
public:
    // Validates magic, then version, then checksum.
    // Throws CorruptFile / VersionMismatch / IoError.
    Reader(std::vector<std::uint8_t> bytes, std::array<char, 4> magic, std::uint32_t version);
    static Reader from_file(const std::string& path, std::array<char, 4> magic,
                            std::uint32_t version);

    const std::string& header_json() const { return header_; }

    std::vector<double> read_f64(std::size_t count);
    std::vector<std::int64_t> read_i64(std::size_t count);
    std::vector<std::uint8_t> read_u8(std::size_t count);
    bool exhausted() const { return pos_ == end_; }

private:
    void need(std::size_t bytes) const;

    std::vector<std::uint8_t> data_;
    std::string header_;
    std::size_t pos_ = 0;
    std::size_t end_ = 0;  // payload end (checksum excluded)
};

}  // namespace travel::container
