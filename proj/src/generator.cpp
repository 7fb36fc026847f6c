#include "neuroprobe/generator.hpp"

#include <algorithm>
#include <string>

#include "neuroprobe/error.hpp"

namespace neuroprobe {

namespace {

std::string layer_name(std::size_t i) { return "layer " + std::to_string(i); }

void validate_layer(const LayerDesc& d, const std::string& name) {
    if (d.out_ch == 0 || d.in_ch == 0) {
        throw ShapeError(name + ": channel counts must be >= 1");
    }
    if (d.kernel % 2 == 0) {
        throw ShapeError(name + ": kernel must be odd, got " + std::to_string(d.kernel));
    }
    if (!(d.activation_slope >= 0.0f && d.activation_slope < 1.0f)) {
        throw ShapeError(name + ": activation slope must be in [0,1)");
    }
}

}  // namespace

std::size_t weight_count(const LayerDesc& d, std::size_t latent_dim) {
    if (d.kind == LayerKind::LatentProject) return d.out_ch * 16 * latent_dim;
    return d.out_ch * d.in_ch * d.kernel * d.kernel;
}

std::size_t bias_count(const LayerDesc& d) {
    return d.kind == LayerKind::LatentProject ? d.out_ch * 16 : d.out_ch;
}

void GeneratorSpec::validate() const {
    if (latent_dim == 0) throw ShapeError("latent_dim must be >= 1");
    if (layers.empty()) throw ShapeError("generator needs at least one layer");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const LayerDesc& d = layers[i];
        validate_layer(d, layer_name(i));
        if (i == 0) {
            if (d.kind != LayerKind::LatentProject) {
                throw ShapeError("layer 0 must be a latent projection");
            }
            if (d.in_ch != latent_dim) {
                throw ShapeError("layer 0 in_ch " + std::to_string(d.in_ch) + " != latent_dim " +
                                 std::to_string(latent_dim));
            }
            if (d.upsample_before) throw ShapeError("layer 0 cannot upsample");
        } else {
            if (d.kind != LayerKind::ConvBlock) {
                throw ShapeError(layer_name(i) + ": only layer 0 may be a latent projection");
            }
            if (d.in_ch != layers[i - 1].out_ch) {
                throw ShapeError(layer_name(i) + ": in_ch " + std::to_string(d.in_ch) +
                                 " does not chain with previous out_ch " +
                                 std::to_string(layers[i - 1].out_ch));
            }
        }
    }
    validate_layer(rgb_head, "rgb_head");
    if (rgb_head.kind != LayerKind::ConvBlock) throw ShapeError("rgb_head must be a conv block");
    if (rgb_head.out_ch != 3) throw ShapeError("rgb_head must have 3 output channels");
    if (rgb_head.in_ch != layers.back().out_ch) {
        throw ShapeError("rgb_head in_ch does not chain with the last layer");
    }
    if (rgb_head.pixelnorm_after) throw ShapeError("rgb_head cannot apply pixelnorm");
}

Shape3 GeneratorSpec::layer_shape(std::size_t i) const {
    std::size_t side = 4;
    for (std::size_t j = 1; j <= i; ++j) {
        if (layers[j].upsample_before) side *= 2;
    }
    return {layers[i].out_ch, side, side};
}

Shape3 GeneratorSpec::rgb_shape() const {
    Shape3 s = layer_shape(layers.size() - 1);
    std::size_t side = s.height * (rgb_head.upsample_before ? 2 : 1);
    return {3, side, side};
}

std::vector<Shape3> GeneratorSpec::layer_shapes() const {
    std::vector<Shape3> out;
    out.reserve(layers.size());
    for (std::size_t i = 0; i < layers.size(); ++i) out.push_back(layer_shape(i));
    return out;
}

Generator::Generator(GeneratorSpec spec, std::vector<LayerWeights> weights, Sha256 digest)
    : spec_(std::move(spec)), weights_(std::move(weights)), digest_(digest) {
    spec_.validate();
    if (weights_.size() != spec_.layers.size() + 1) {
        throw ShapeError("expected " + std::to_string(spec_.layers.size() + 1) +
                         " weight entries (layers + rgb_head), got " + std::to_string(weights_.size()));
    }
    filters_.resize(weights_.size());
    for (std::size_t i = 0; i < weights_.size(); ++i) {
        const bool is_rgb = i == spec_.layers.size();
        const LayerDesc& d = is_rgb ? spec_.rgb_head : spec_.layers[i];
        const std::string name = is_rgb ? std::string("rgb_head") : layer_name(i);
        if (weights_[i].weight.size() != weight_count(d, spec_.latent_dim)) {
            throw ShapeError(name + ": weight array has " + std::to_string(weights_[i].weight.size()) +
                             " entries, expected " + std::to_string(weight_count(d, spec_.latent_dim)));
        }
        if (weights_[i].bias.size() != bias_count(d)) {
            throw ShapeError(name + ": bias array has " + std::to_string(weights_[i].bias.size()) +
                             " entries, expected " + std::to_string(bias_count(d)));
        }
        if (d.kind == LayerKind::ConvBlock) {
            filters_[i] = Filter4{d.out_ch, d.in_ch, d.kernel, weights_[i].weight};
        }
    }
}

Tensor3 Generator::run_layer(std::size_t i, const Tensor3& input) const {
    const LayerDesc& d = spec_.layers[i];
    Tensor3 out = d.upsample_before ? conv2d(upsample2x(input), filters_[i], weights_[i].bias)
                                    : conv2d(input, filters_[i], weights_[i].bias);
    leaky_relu_inplace(out, d.activation_slope);
    return out;
}

Tensor3 Generator::finish_layer(std::size_t i, Tensor3 activated) const {
    if (spec_.layers[i].pixelnorm_after) return pixelnorm(activated, kPixelnormEpsilon);
    return activated;
}

Tensor3 Generator::run_rgb(const Tensor3& input) const {
    const std::size_t i = spec_.layers.size();
    Tensor3 out = spec_.rgb_head.upsample_before
                      ? conv2d(upsample2x(input), filters_[i], weights_[i].bias)
                      : conv2d(input, filters_[i], weights_[i].bias);
    for (float& v : out.values()) v = std::clamp(v, -1.0f, 1.0f);
    return out;
}

namespace {

Tensor3 apply_hook(const LayerHook& hook, std::size_t i, Tensor3 t) {
    if (!hook) return t;
    const Shape3 expected = t.shape();
    Tensor3 out = hook(i, std::move(t));
    if (out.shape() != expected) {
        throw ContractError("hook changed the shape of layer " + std::to_string(i) + " featuremap");
    }
    return out;
}

}  // namespace

LayerTrace Generator::forward(std::span<const float> z) const { return forward_hooked(z, {}); }

LayerTrace Generator::forward_hooked(std::span<const float> z, const LayerHook& hook) const {
    if (z.size() != spec_.latent_dim) {
        throw ShapeError("latent has " + std::to_string(z.size()) + " dimensions, generator expects " +
                         std::to_string(spec_.latent_dim));
    }
    Tensor3 f0 = project_latent(z, weights_[0].weight, weights_[0].bias, spec_.layers[0].out_ch);
    leaky_relu_inplace(f0, spec_.layers[0].activation_slope);
    f0 = apply_hook(hook, 0, std::move(f0));

    LayerTrace rest = resume(1, f0, hook);
    LayerTrace trace;
    trace.layers.reserve(spec_.layers.size());
    trace.layers.push_back(std::move(f0));
    for (Tensor3& t : rest.layers) trace.layers.push_back(std::move(t));
    trace.image = std::move(rest.image);
    return trace;
}

LayerTrace Generator::resume(std::size_t first, Tensor3 featuremap, const LayerHook& hook) const {
    if (first == 0 || first > spec_.layers.size()) {
        throw ContractError("resume index must be in [1, " + std::to_string(spec_.layers.size()) + "]");
    }
    if (featuremap.shape() != spec_.layer_shape(first - 1)) {
        throw ShapeError("resume featuremap does not match layer " + std::to_string(first - 1) +
                         " output shape");
    }
    LayerTrace trace;
    Tensor3 next = finish_layer(first - 1, std::move(featuremap));
    for (std::size_t i = first; i < spec_.layers.size(); ++i) {
        Tensor3 f = apply_hook(hook, i, run_layer(i, next));
        next = finish_layer(i, f);
        trace.layers.push_back(std::move(f));
    }
    trace.image = run_rgb(next);
    return trace;
}

}  // namespace neuroprobe
