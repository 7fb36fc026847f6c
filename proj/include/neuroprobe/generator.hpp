#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "neuroprobe/tensor.hpp"

namespace neuroprobe {

enum class LayerKind { LatentProject, ConvBlock };

struct LayerDesc {
    LayerKind kind = LayerKind::ConvBlock;
    std::size_t in_ch = 0;
    std::size_t out_ch = 0;
    std::size_t kernel = 1;
    bool upsample_before = false;
    float activation_slope = 0.2f;
    bool pixelnorm_after = false;

    friend bool operator==(const LayerDesc&, const LayerDesc&) = default;
};

/// Architecture of a layered convolutional generator.
///
/// Layer 0 is always a latent projection to C0 x 4 x 4; every later layer is a
/// conv block (optional 2x nearest upsample, same-size conv, leaky activation,
/// optional pixelnorm). The RGB head is a linear conv block with three output
/// channels whose result is clamped to [-1, 1]; its activation slope is ignored
/// and it may not request pixelnorm.
struct GeneratorSpec {
    std::size_t latent_dim = 0;
    std::vector<LayerDesc> layers;
    LayerDesc rgb_head;

    std::size_t num_layers() const noexcept { return layers.size(); }

    // Throws ShapeError on any broken invariant (channel chain, odd kernels,
    // slope range, layer kinds).
    void validate() const;

    // Output shape of layer i; rgb_shape() is the final image shape.
    Shape3 layer_shape(std::size_t i) const;
    Shape3 rgb_shape() const;
    std::vector<Shape3> layer_shapes() const;

    friend bool operator==(const GeneratorSpec&, const GeneratorSpec&) = default;
};

struct LayerWeights {
    std::vector<float> weight;
    std::vector<float> bias;

    friend bool operator==(const LayerWeights&, const LayerWeights&) = default;
};

// Expected weight/bias element counts for a layer of the given spec.
std::size_t weight_count(const LayerDesc& d, std::size_t latent_dim);
std::size_t bias_count(const LayerDesc& d);

using Sha256 = std::array<std::uint8_t, 32>;

/// Per-layer post-activation featuremaps of one forward pass plus the image.
struct LayerTrace {
    std::vector<Tensor3> layers;
    Tensor3 image;
};

// Called on each layer's post-activation tensor before pixelnorm; the returned
// tensor feeds the next layer and is what the trace records.
using LayerHook = std::function<Tensor3(std::size_t layer, Tensor3 featuremap)>;

/// Immutable generator: spec, weights (layers then RGB head) and the SHA-256
/// of the GWF bytes it was loaded from. Forward calls are const and may run
/// concurrently.
class Generator {
public:
    Generator(GeneratorSpec spec, std::vector<LayerWeights> weights, Sha256 digest = {});

    const GeneratorSpec& spec() const noexcept { return spec_; }
    const std::vector<LayerWeights>& weights() const noexcept { return weights_; }
    const Sha256& digest() const noexcept { return digest_; }
    std::size_t num_layers() const noexcept { return spec_.num_layers(); }

    LayerTrace forward(std::span<const float> z) const;
    LayerTrace forward_hooked(std::span<const float> z, const LayerHook& hook) const;

    /// Resumes a forward pass from a recorded featuremap.
    ///
    /// `featuremap` is the (post-hook, pre-pixelnorm) output of layer
    /// `first - 1`; layers `first ..` run as usual. The returned trace holds
    /// entries for layers `first .. L-1` only.
    LayerTrace resume(std::size_t first, Tensor3 featuremap, const LayerHook& hook = {}) const;

private:
    Tensor3 run_layer(std::size_t i, const Tensor3& input) const;
    Tensor3 finish_layer(std::size_t i, Tensor3 activated) const;
    Tensor3 run_rgb(const Tensor3& input) const;

    GeneratorSpec spec_;
    std::vector<LayerWeights> weights_;
    std::vector<Filter4> filters_;
    Sha256 digest_;
};

inline constexpr float kPixelnormEpsilon = 1e-8f;

}  // namespace neuroprobe
