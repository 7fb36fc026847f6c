#include "neuroprobe/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <string>

#include <zlib.h>

#include "neuroprobe/error.hpp"

namespace neuroprobe {

namespace {

std::uint8_t to_byte(double v) {
    return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
}

double luma(const std::uint8_t* p) { return 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]; }

void put_u32be(Bytes& out, std::uint32_t v) {
    for (int i = 3; i >= 0; --i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_chunk(Bytes& out, const char* type, std::span<const std::uint8_t> data) {
    put_u32be(out, static_cast<std::uint32_t>(data.size()));
    const std::size_t type_at = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const uLong crc = crc32(0L, out.data() + type_at, static_cast<uInt>(4 + data.size()));
    put_u32be(out, static_cast<std::uint32_t>(crc));
}

std::uint32_t get_u32be(std::span<const std::uint8_t> b, std::size_t at) {
    return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
           std::uint32_t{b[at + 3]};
}

constexpr std::uint8_t kSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};

}  // namespace

RgbImage to_rgb8(const Tensor3& image) {
    if (image.channels() != 3) throw ShapeError("to_rgb8 expects a 3-channel image");
    RgbImage out(image.width(), image.height());
    for (std::size_t y = 0; y < image.height(); ++y) {
        for (std::size_t x = 0; x < image.width(); ++x) {
            std::uint8_t* p = out.at(x, y);
            for (std::size_t c = 0; c < 3; ++c) {
                p[c] = to_byte((static_cast<double>(image.at(c, y, x)) + 1.0) * 127.5);
            }
        }
    }
    return out;
}

RgbImage grayscale(const RgbImage& img) {
    RgbImage out = img;
    for (std::size_t i = 0; i < img.width * img.height; ++i) {
        const std::uint8_t g = to_byte(luma(img.pixels.data() + i * 3));
        std::memset(out.pixels.data() + i * 3, g, 3);
    }
    return out;
}

double mean_luma(const RgbImage& img, std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1) {
    x1 = std::min(x1, img.width);
    y1 = std::min(y1, img.height);
    if (x0 >= x1 || y0 >= y1) return 0.0;
    double sum = 0.0;
    for (std::size_t y = y0; y < y1; ++y) {
        for (std::size_t x = x0; x < x1; ++x) sum += luma(img.at(x, y));
    }
    return sum / static_cast<double>((x1 - x0) * (y1 - y0));
}

RgbImage make_grid(std::span<const RgbImage> images, std::size_t cols, std::size_t pad, std::uint8_t pad_value) {
    if (images.empty()) throw ContractError("grid needs at least one image");
    if (cols == 0) throw ContractError("grid needs at least one column");
    const std::size_t w = images[0].width;
    const std::size_t h = images[0].height;
    for (const RgbImage& img : images) {
        if (img.width != w || img.height != h) throw ShapeError("grid images must share one size");
    }
    const std::size_t rows = (images.size() + cols - 1) / cols;
    RgbImage grid(cols * (w + pad), rows * (h + pad), pad_value);
    for (std::size_t i = 0; i < images.size(); ++i) {
        const std::size_t ox = (i % cols) * (w + pad);
        const std::size_t oy = (i / cols) * (h + pad);
        for (std::size_t y = 0; y < h; ++y) {
            std::memcpy(grid.at(ox, oy + y), images[i].at(0, y), w * 3);
        }
    }
    return grid;
}

Bytes encode_png(const RgbImage& img) {
    if (img.width == 0 || img.height == 0) throw ShapeError("cannot encode an empty image");
    const std::size_t stride = img.width * 3;
    std::vector<std::uint8_t> raw;
    raw.reserve((stride + 1) * img.height);
    for (std::size_t y = 0; y < img.height; ++y) {
        raw.push_back(0);
        raw.insert(raw.end(), img.at(0, y), img.at(0, y) + stride);
    }
    uLongf packed_len = compressBound(static_cast<uLong>(raw.size()));
    std::vector<std::uint8_t> packed(packed_len);
    if (compress2(packed.data(), &packed_len, raw.data(), static_cast<uLong>(raw.size()), 9) != Z_OK) {
        throw Error("zlib compression failed");
    }
    packed.resize(packed_len);

    Bytes out(std::begin(kSignature), std::end(kSignature));
    Bytes ihdr;
    put_u32be(ihdr, static_cast<std::uint32_t>(img.width));
    put_u32be(ihdr, static_cast<std::uint32_t>(img.height));
    ihdr.insert(ihdr.end(), {8, 2, 0, 0, 0});  // 8-bit, truecolor, deflate, filter 0, no interlace
    put_chunk(out, "IHDR", ihdr);
    put_chunk(out, "IDAT", packed);
    put_chunk(out, "IEND", {});
    return out;
}

RgbImage decode_png(std::span<const std::uint8_t> bytes) {
    auto fail = [](const std::string& msg, std::size_t at) -> void { throw FormatError("PNG: " + msg, at); };
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kSignature, 8) != 0) fail("bad signature", 0);

    std::size_t pos = 8;
    std::size_t width = 0, height = 0;
    std::vector<std::uint8_t> packed;
    bool seen_end = false;
    while (pos + 12 <= bytes.size() && !seen_end) {
        const std::uint32_t len = get_u32be(bytes, pos);
        if (pos + 12 + len > bytes.size()) fail("truncated chunk", pos);
        const std::string type(reinterpret_cast<const char*>(bytes.data() + pos + 4), 4);
        const auto data = bytes.subspan(pos + 8, len);
        if (type == "IHDR") {
            if (len != 13) fail("bad IHDR", pos);
            width = get_u32be(data, 0);
            height = get_u32be(data, 4);
            if (data[8] != 8 || data[9] != 2 || data[12] != 0) fail("only 8-bit RGB non-interlaced is supported", pos);
        } else if (type == "IDAT") {
            packed.insert(packed.end(), data.begin(), data.end());
        } else if (type == "IEND") {
            seen_end = true;
        }
        pos += 12 + len;
    }
    if (width == 0 || height == 0 || !seen_end) fail("missing IHDR or IEND", pos);

    const std::size_t stride = width * 3;
    std::vector<std::uint8_t> raw((stride + 1) * height);
    uLongf raw_len = static_cast<uLongf>(raw.size());
    if (uncompress(raw.data(), &raw_len, packed.data(), static_cast<uLong>(packed.size())) != Z_OK ||
        raw_len != raw.size()) {
        fail("corrupt image data", pos);
    }

    RgbImage img(width, height);
    std::vector<std::uint8_t> prev(stride, 0);
    for (std::size_t y = 0; y < height; ++y) {
        const std::uint8_t filter = raw[y * (stride + 1)];
        const std::uint8_t* src = raw.data() + y * (stride + 1) + 1;
        std::uint8_t* dst = img.at(0, y);
        for (std::size_t i = 0; i < stride; ++i) {
            const int a = i >= 3 ? dst[i - 3] : 0;
            const int b = prev[i];
            const int c = i >= 3 ? prev[i - 3] : 0;
            int pred = 0;
            switch (filter) {
                case 0: pred = 0; break;
                case 1: pred = a; break;
                case 2: pred = b; break;
                case 3: pred = (a + b) / 2; break;
                case 4: {
                    const int p = a + b - c;
                    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
                    pred = (pa <= pb && pa <= pc) ? a : (pb <= pc ? b : c);
                    break;
                }
                default: fail("unknown row filter", pos);
            }
            dst[i] = static_cast<std::uint8_t>(src[i] + pred);
        }
        std::memcpy(prev.data(), dst, stride);
    }
    return img;
}

}  // namespace neuroprobe
