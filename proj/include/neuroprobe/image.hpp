#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "neuroprobe/binio.hpp"
#include "neuroprobe/tensor.hpp"

namespace neuroprobe {

/// Interleaved 8-bit RGB raster.
struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // width * height * 3

    RgbImage() = default;
    RgbImage(std::size_t w, std::size_t h, std::uint8_t fill = 0) : width(w), height(h), pixels(w * h * 3, fill) {}

    std::uint8_t* at(std::size_t x, std::size_t y) { return pixels.data() + (y * width + x) * 3; }
    const std::uint8_t* at(std::size_t x, std::size_t y) const { return pixels.data() + (y * width + x) * 3; }

    friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

// Maps a 3 x H x W generator image in [-1,1] to bytes: round((v+1)*127.5).
RgbImage to_rgb8(const Tensor3& image);

// Rec. 601 luma replicated into all three channels.
RgbImage grayscale(const RgbImage& img);

// Mean Rec. 601 luma over the rectangle [x0,x1) x [y0,y1), in [0,255].
double mean_luma(const RgbImage& img, std::size_t x0, std::size_t y0, std::size_t x1, std::size_t y1);

/// Tiles same-sized images row-major into a grid of `cols` columns.
///
/// Each cell is (w + pad) x (h + pad) with the padding on the right and
/// bottom, so the grid is cols*(w+pad) wide and rows*(h+pad) tall.
RgbImage make_grid(std::span<const RgbImage> images, std::size_t cols, std::size_t pad,
                   std::uint8_t pad_value = 255);

// 8-bit RGB PNG, filter 0 on every row, one IDAT chunk, zlib level 9, no
// ancillary chunks: the bytes depend only on the pixels.
Bytes encode_png(const RgbImage& img);

// Decodes the 8-bit RGB, non-interlaced PNGs this library writes (all five
// row filters are accepted).
RgbImage decode_png(std::span<const std::uint8_t> bytes);

}  // namespace neuroprobe
