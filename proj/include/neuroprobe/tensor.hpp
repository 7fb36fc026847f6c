#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace neuroprobe {

struct Shape3 {
    std::size_t channels = 1;
    std::size_t height = 1;
    std::size_t width = 1;

    std::size_t size() const noexcept { return channels * height * width; }
    friend bool operator==(const Shape3&, const Shape3&) = default;
};

/// Dense C x H x W single-precision buffer, channel-major then row-major.
///
/// This is the unit every kernel operates on: latent projections, per-layer
/// featuremaps and the final RGB image are all Tensor3 values.
class Tensor3 {
public:
    Tensor3() : Tensor3(Shape3{}) {}
    explicit Tensor3(Shape3 shape, float fill = 0.0f);
    Tensor3(Shape3 shape, std::vector<float> data);

    const Shape3& shape() const noexcept { return shape_; }
    std::size_t channels() const noexcept { return shape_.channels; }
    std::size_t height() const noexcept { return shape_.height; }
    std::size_t width() const noexcept { return shape_.width; }
    std::size_t size() const noexcept { return data_.size(); }

    float& at(std::size_t c, std::size_t y, std::size_t x) noexcept {
        return data_[(c * shape_.height + y) * shape_.width + x];
    }
    float at(std::size_t c, std::size_t y, std::size_t x) const noexcept {
        return data_[(c * shape_.height + y) * shape_.width + x];
    }

    std::span<float> values() noexcept { return data_; }
    std::span<const float> values() const noexcept { return data_; }
    const std::vector<float>& vec() const noexcept { return data_; }

    friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
    Shape3 shape_;
    std::vector<float> data_;
};

/// Convolution filter bank laid out [out_ch, in_ch, k, k].
struct Filter4 {
    std::size_t out_ch = 0;
    std::size_t in_ch = 0;
    std::size_t kernel = 1;
    std::vector<float> data;

    std::size_t size() const noexcept { return out_ch * in_ch * kernel * kernel; }
};

// Same-size 2-D convolution: stride 1, zero padding (k-1)/2, k odd.
// Dot products accumulate in double and are rounded once to float.
Tensor3 conv2d(const Tensor3& input, const Filter4& weights, std::span<const float> bias);

// Nearest-neighbour 2x upsampling.
Tensor3 upsample2x(const Tensor3& input);

Tensor3 leaky_relu(const Tensor3& input, float slope);
void leaky_relu_inplace(Tensor3& t, float slope);

// Divides each spatial location's channel vector by sqrt(mean(x^2) + epsilon).
Tensor3 pixelnorm(const Tensor3& input, float epsilon);

/// Affine map of a latent vector reshaped to `channels` x 4 x 4.
///
/// `weights` is row-major [channels*16, z.size()].
Tensor3 project_latent(std::span<const float> z, std::span<const float> weights,
                       std::span<const float> bias, std::size_t channels);

}  // namespace neuroprobe
