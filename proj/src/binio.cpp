#include "neuroprobe/binio.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <openssl/evp.h>

#include "neuroprobe/error.hpp"

namespace neuroprobe {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

void ByteWriter::magic(std::string_view m) { buf_.insert(buf_.end(), m.begin(), m.end()); }

void ByteWriter::u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

void ByteWriter::f32s(std::span<const float> v) {
    const std::size_t at = buf_.size();
    buf_.resize(at + v.size_bytes());
    if (!v.empty()) std::memcpy(buf_.data() + at, v.data(), v.size_bytes());
}

void ByteWriter::u32s(std::span<const std::uint32_t> v) {
    const std::size_t at = buf_.size();
    buf_.resize(at + v.size_bytes());
    if (!v.empty()) std::memcpy(buf_.data() + at, v.data(), v.size_bytes());
}

void ByteWriter::json_header(const nlohmann::json& header) {
    const std::string text = header.dump();
    u32(static_cast<std::uint32_t>(text.size()));
    buf_.insert(buf_.end(), text.begin(), text.end());
}

ByteReader::ByteReader(std::span<const std::uint8_t> data, std::string context)
    : data_(data), context_(std::move(context)) {}

void ByteReader::fail(const std::string& msg) const {
    throw FormatError(context_.empty() ? msg : context_ + ": " + msg, pos_);
}

void ByteReader::need(std::size_t n, std::string_view what) {
    if (remaining() < n) {
        fail("truncated while reading " + std::string(what) + ": need " + std::to_string(n) +
             " bytes, " + std::to_string(remaining()) + " left");
    }
}

void ByteReader::expect_magic(std::string_view m) {
    if (remaining() < m.size() || std::memcmp(data_.data() + pos_, m.data(), m.size()) != 0) {
        fail("bad magic, expected \"" + std::string(m) + "\"");
    }
    pos_ += m.size();
}

std::uint32_t ByteReader::u32(std::string_view what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(data_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
}

float ByteReader::f32(std::string_view what) { return std::bit_cast<float>(u32(what)); }

std::vector<float> ByteReader::f32s(std::size_t count, std::string_view what) {
    if (count > remaining() / 4) need(count * 4, what);
    std::vector<float> out(count);
    if (count) std::memcpy(out.data(), data_.data() + pos_, count * 4);
    pos_ += count * 4;
    return out;
}

std::vector<std::uint32_t> ByteReader::u32s(std::size_t count, std::string_view what) {
    if (count > remaining() / 4) need(count * 4, what);
    std::vector<std::uint32_t> out(count);
    if (count) std::memcpy(out.data(), data_.data() + pos_, count * 4);
    pos_ += count * 4;
    return out;
}

nlohmann::json ByteReader::json_header() {
    const std::uint32_t len = u32("header length");
    need(len, "JSON header");
    const auto* begin = reinterpret_cast<const char*>(data_.data() + pos_);
    nlohmann::json j = nlohmann::json::parse(begin, begin + len, nullptr, false);
    if (j.is_discarded() || !j.is_object()) fail("header is not a JSON object");
    pos_ += len;
    return j;
}

void ByteReader::expect_end() {
    if (remaining() != 0) fail(std::to_string(remaining()) + " unexpected trailing bytes");
}

Bytes read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + path.string() + " for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

Sha256 sha256(std::span<const std::uint8_t> bytes) {
    Sha256 out{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size()) {
        throw Error("SHA-256 computation failed");
    }
    return out;
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    s.reserve(bytes.size() * 2);
    for (std::uint8_t b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xF]);
    }
    return s;
}

Sha256 sha256_from_hex(std::string_view hex) {
    if (hex.size() != 64) throw FormatError("digest must be 64 hex characters", 0);
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9') return c - '0';
        if (c >= 'a' && c <= 'f') return c - 'a' + 10;
        if (c >= 'A' && c <= 'F') return c - 'A' + 10;
        return -1;
    };
    Sha256 out{};
    for (std::size_t i = 0; i < 32; ++i) {
        const int hi = nibble(hex[2 * i]);
        const int lo = nibble(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) throw FormatError("digest contains a non-hex character", 0);
        out[i] = static_cast<std::uint8_t>(hi * 16 + lo);
    }
    return out;
}

}  // namespace neuroprobe
