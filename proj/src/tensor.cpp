#include "neuroprobe/tensor.hpp"

#include <cmath>
#include <string>

#include "neuroprobe/error.hpp"

namespace neuroprobe {

namespace {

void check_dims(const Shape3& s) {
    if (s.channels == 0 || s.height == 0 || s.width == 0) {
        throw ShapeError("tensor dimensions must be >= 1");
    }
}

}  // namespace

Tensor3::Tensor3(Shape3 shape, float fill) : shape_(shape) {
    check_dims(shape_);
    data_.assign(shape_.size(), fill);
}

Tensor3::Tensor3(Shape3 shape, std::vector<float> data) : shape_(shape), data_(std::move(data)) {
    check_dims(shape_);
    if (data_.size() != shape_.size()) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape size " + std::to_string(shape_.size()));
    }
}

Tensor3 conv2d(const Tensor3& input, const Filter4& weights, std::span<const float> bias) {
    const std::size_t k = weights.kernel;
    if (k % 2 == 0) {
        throw ShapeError("conv2d kernel size must be odd, got " + std::to_string(k));
    }
    if (weights.in_ch != input.channels()) {
        throw ShapeError("conv2d expects " + std::to_string(weights.in_ch) + " input channels, got " +
                         std::to_string(input.channels()));
    }
    if (weights.data.size() != weights.size()) {
        throw ShapeError("conv2d weight array has wrong length");
    }
    if (bias.size() != weights.out_ch) {
        throw ShapeError("conv2d bias length " + std::to_string(bias.size()) + " != out_ch " +
                         std::to_string(weights.out_ch));
    }

    const auto h = static_cast<std::ptrdiff_t>(input.height());
    const auto w = static_cast<std::ptrdiff_t>(input.width());
    const auto pad = static_cast<std::ptrdiff_t>(k / 2);
    const auto kk = static_cast<std::ptrdiff_t>(k);
    const std::size_t plane = input.height() * input.width();
    const float* in = input.values().data();

    Tensor3 out({weights.out_ch, input.height(), input.width()});
    float* dst = out.values().data();

    for (std::size_t oc = 0; oc < weights.out_ch; ++oc) {
        const float* wbase = weights.data.data() + oc * weights.in_ch * k * k;
        for (std::ptrdiff_t y = 0; y < h; ++y) {
            for (std::ptrdiff_t x = 0; x < w; ++x) {
                double acc = 0.0;
                for (std::size_t ic = 0; ic < weights.in_ch; ++ic) {
                    const float* src = in + ic * plane;
                    const float* wk = wbase + ic * k * k;
                    for (std::ptrdiff_t ky = 0; ky < kk; ++ky) {
                        const std::ptrdiff_t iy = y + ky - pad;
                        if (iy < 0 || iy >= h) continue;
                        for (std::ptrdiff_t kx = 0; kx < kk; ++kx) {
                            const std::ptrdiff_t ix = x + kx - pad;
                            if (ix < 0 || ix >= w) continue;
                            acc += static_cast<double>(src[iy * w + ix]) *
                                   static_cast<double>(wk[ky * kk + kx]);
                        }
                    }
                }
                acc += static_cast<double>(bias[oc]);
                *dst++ = static_cast<float>(acc);
            }
        }
    }
    return out;
}

Tensor3 upsample2x(const Tensor3& input) {
    Tensor3 out({input.channels(), input.height() * 2, input.width() * 2});
    for (std::size_t c = 0; c < input.channels(); ++c) {
        for (std::size_t y = 0; y < out.height(); ++y) {
            for (std::size_t x = 0; x < out.width(); ++x) {
                out.at(c, y, x) = input.at(c, y / 2, x / 2);
            }
        }
    }
    return out;
}

void leaky_relu_inplace(Tensor3& t, float slope) {
    for (float& v : t.values()) {
        if (!(v > 0.0f)) v *= slope;
    }
}

Tensor3 leaky_relu(const Tensor3& input, float slope) {
    Tensor3 out = input;
    leaky_relu_inplace(out, slope);
    return out;
}

Tensor3 pixelnorm(const Tensor3& input, float epsilon) {
    Tensor3 out = input;
    const std::size_t plane = input.height() * input.width();
    const auto channels = static_cast<double>(input.channels());
    const float* src = input.values().data();
    float* dst = out.values().data();
    for (std::size_t p = 0; p < plane; ++p) {
        double sq = 0.0;
        for (std::size_t c = 0; c < input.channels(); ++c) {
            const double v = src[c * plane + p];
            sq += v * v;
        }
        const double scale = 1.0 / std::sqrt(sq / channels + static_cast<double>(epsilon));
        for (std::size_t c = 0; c < input.channels(); ++c) {
            dst[c * plane + p] = static_cast<float>(src[c * plane + p] * scale);
        }
    }
    return out;
}

Tensor3 project_latent(std::span<const float> z, std::span<const float> weights,
                       std::span<const float> bias, std::size_t channels) {
    const std::size_t rows = channels * 16;
    if (channels == 0 || z.empty()) {
        throw ShapeError("project_latent needs at least one channel and one latent dimension");
    }
    if (weights.size() != rows * z.size()) {
        throw ShapeError("project_latent weight array has " + std::to_string(weights.size()) +
                         " entries, expected " + std::to_string(rows * z.size()));
    }
    if (bias.size() != rows) {
        throw ShapeError("project_latent bias has " + std::to_string(bias.size()) +
                         " entries, expected " + std::to_string(rows));
    }
    std::vector<float> out(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const float* row = weights.data() + r * z.size();
        double acc = 0.0;
        for (std::size_t j = 0; j < z.size(); ++j) {
            acc += static_cast<double>(row[j]) * static_cast<double>(z[j]);
        }
        out[r] = static_cast<float>(acc + static_cast<double>(bias[r]));
    }
    return Tensor3({channels, 4, 4}, std::move(out));
}

}  // namespace neuroprobe
