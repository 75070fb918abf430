#include "travel/container.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>

#include "travel/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "container serialization assumes a little-endian host");

namespace travel::container {

namespace {

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
    return static_cast<std::uint32_t>(
        ::crc32(0L, bytes.data(), static_cast<uInt>(bytes.size())));
}

template <typename T>
void append_raw(std::vector<std::uint8_t>& out, const T* data, std::size_t count) {
    const auto* p = reinterpret_cast<const std::uint8_t*>(data);
    out.insert(out.end(), p, p + count * sizeof(T));
}

}  // namespace

Writer::Writer(std::array<char, 4> magic, std::uint32_t version)
    : magic_(magic), version_(version) {}

void Writer::set_header(const std::string& json) { header_ = json; }

void Writer::append_f64(std::span<const double> values) {
    append_raw(payload_, values.data(), values.size());
}

void Writer::append_i64(std::span<const std::int64_t> values) {
    append_raw(payload_, values.data(), values.size());
}

void Writer::append_u8(std::span<const std::uint8_t> values) {
    append_raw(payload_, values.data(), values.size());
}

std::vector<std::uint8_t> Writer::finish() const {
    std::vector<std::uint8_t> out;
    out.reserve(16 + header_.size() + payload_.size() + 4);
    append_raw(out, magic_.data(), magic_.size());
    append_raw(out, &version_, 1);
    const std::uint64_t hlen = header_.size();
    append_raw(out, &hlen, 1);
    append_raw(out, header_.data(), header_.size());
    out.insert(out.end(), payload_.begin(), payload_.end());
    const std::uint32_t crc = crc32_of(out);
    append_raw(out, &crc, 1);
    return out;
}

void Writer::write_file(const std::string& path) const {
    const auto bytes = finish();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path);
}

Reader::Reader(std::vector<std::uint8_t> bytes, std::array<char, 4> magic, std::uint32_t version)
    : data_(std::move(bytes)) {
    if (data_.size() < 20) throw CorruptFile("file too short for container framing");
    if (std::memcmp(data_.data(), magic.data(), 4) != 0)
        throw CorruptFile("bad magic bytes");
    std::uint32_t file_version = 0;
    std::memcpy(&file_version, data_.data() + 4, 4);
    if (file_version != version) throw VersionMismatch(file_version, version);

    const std::size_t crc_pos = data_.size() - 4;
    std::uint32_t stored = 0;
    std::memcpy(&stored, data_.data() + crc_pos, 4);
    const std::uint32_t actual = crc32_of({data_.data(), crc_pos});
    if (stored != actual) throw CorruptFile("checksum mismatch");

    std::uint64_t hlen = 0;
    std::memcpy(&hlen, data_.data() + 8, 8);
    if (16 + hlen > crc_pos) throw CorruptFile("header length exceeds file size");
    header_.assign(reinterpret_cast<const char*>(data_.data() + 16), hlen);
    pos_ = 16 + hlen;
    end_ = crc_pos;
}

Reader Reader::from_file(const std::string& path, std::array<char, 4> magic,
                         std::uint32_t version) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    return Reader(std::move(bytes), magic, version);
}

void Reader::need(std::size_t bytes) const {
    if (pos_ + bytes > end_) throw CorruptFile("payload shorter than header declares");
}

std::vector<double> Reader::read_f64(std::size_t count) {
    need(count * sizeof(double));
    std::vector<double> out(count);
    std::memcpy(out.data(), data_.data() + pos_, count * sizeof(double));
    pos_ += count * sizeof(double);
    return out;
}

std::vector<std::int64_t> Reader::read_i64(std::size_t count) {
    need(count * sizeof(std::int64_t));
    std::vector<std::int64_t> out(count);
    std::memcpy(out.data(), data_.data() + pos_, count * sizeof(std::int64_t));
    pos_ += count * sizeof(std::int64_t);
    return out;
}

std::vector<std::uint8_t> Reader::read_u8(std::size_t count) {
    need(count);
    std::vector<std::uint8_t> out(data_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                  data_.begin() + static_cast<std::ptrdiff_t>(pos_ + count));
    pos_ += count;
    return out;
}

}  // namespace travel::container
