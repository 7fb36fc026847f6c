#pragma once

// Helpers shared by the GWF1 / GRT1 / GLZ1 / FTS1 file formats. Every format
// starts with a 4-byte magic, a u32 little-endian header length and a UTF-8
// JSON header, followed by a little-endian binary payload.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "neuroprobe/generator.hpp"

namespace neuroprobe {

using Bytes = std::vector<std::uint8_t>;

class ByteWriter {
public:
    void magic(std::string_view m);
    void u32(std::uint32_t v);
    void f32(float v);
    void f32s(std::span<const float> v);
    void u32s(std::span<const std::uint32_t> v);
    void json_header(const nlohmann::json& header);

    Bytes take() && { return std::move(buf_); }
    const Bytes& bytes() const noexcept { return buf_; }

private:
    Bytes buf_;
};

/// Bounds-checked little-endian reader. Every failure is a FormatError that
/// carries the offset where it occurred, prefixed with `context` (usually the
/// file name).
class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> data, std::string context);

    void expect_magic(std::string_view m);
    std::uint32_t u32(std::string_view what);
    float f32(std::string_view what);
    std::vector<float> f32s(std::size_t count, std::string_view what);
    std::vector<std::uint32_t> u32s(std::size_t count, std::string_view what);
    nlohmann::json json_header();
    void expect_end();

    std::size_t offset() const noexcept { return pos_; }
    std::size_t remaining() const noexcept { return data_.size() - pos_; }
    [[noreturn]] void fail(const std::string& msg) const;

private:
    void need(std::size_t n, std::string_view what);

    std::span<const std::uint8_t> data_;
    std::string context_;
    std::size_t pos_ = 0;
};

Bytes read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

Sha256 sha256(std::span<const std::uint8_t> bytes);
std::string to_hex(std::span<const std::uint8_t> bytes);
Sha256 sha256_from_hex(std::string_view hex);

}  // namespace neuroprobe
