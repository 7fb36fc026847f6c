#include "neuroprobe/gwf.hpp"

#include "neuroprobe/error.hpp"

namespace neuroprobe {

namespace {

constexpr int kFormatVersion = 1;

nlohmann::json layer_to_json(const LayerDesc& d) {
    return {
        {"kind", d.kind == LayerKind::LatentProject ? "latent_project" : "conv_block"},
        {"in_ch", d.in_ch},
        {"out_ch", d.out_ch},
        {"kernel", d.kernel},
        {"upsample_before", d.upsample_before},
        {"activation_slope", d.activation_slope},
        {"pixelnorm_after", d.pixelnorm_after},
    };
}

LayerDesc layer_from_json(const nlohmann::json& j, ByteReader& r, const std::string& name) {
    try {
        LayerDesc d;
        const std::string kind = j.at("kind").get<std::string>();
        if (kind == "latent_project") {
            d.kind = LayerKind::LatentProject;
        } else if (kind == "conv_block") {
            d.kind = LayerKind::ConvBlock;
        } else {
            r.fail(name + ": unknown layer kind \"" + kind + "\"");
        }
        d.in_ch = j.at("in_ch").get<std::size_t>();
        d.out_ch = j.at("out_ch").get<std::size_t>();
        d.kernel = j.at("kernel").get<std::size_t>();
        d.upsample_before = j.at("upsample_before").get<bool>();
        d.activation_slope = j.at("activation_slope").get<float>();
        d.pixelnorm_after = j.at("pixelnorm_after").get<bool>();
        return d;
    } catch (const nlohmann::json::exception& e) {
        r.fail(name + ": malformed layer description: " + e.what());
    }
}

}  // namespace

Bytes write_gwf(const GeneratorSpec& spec, std::span<const LayerWeights> weights) {
    nlohmann::json header;
    header["format_version"] = kFormatVersion;
    header["latent_dim"] = spec.latent_dim;
    header["layers"] = nlohmann::json::array();
    for (const LayerDesc& d : spec.layers) header["layers"].push_back(layer_to_json(d));
    header["rgb_head"] = layer_to_json(spec.rgb_head);

    ByteWriter w;
    w.magic("GWF1");
    w.json_header(header);
    for (const LayerWeights& lw : weights) {
        w.f32s(lw.weight);
        w.f32s(lw.bias);
    }
    return std::move(w).take();
}

Bytes write_gwf(const Generator& g) { return write_gwf(g.spec(), g.weights()); }

Generator load_gwf(std::span<const std::uint8_t> bytes, const std::string& context) {
    ByteReader r(bytes, context);
    r.expect_magic("GWF1");
    const nlohmann::json header = r.json_header();

    GeneratorSpec spec;
    try {
        if (header.at("format_version").get<int>() != kFormatVersion) {
            r.fail("unsupported format_version " + header.at("format_version").dump());
        }
        spec.latent_dim = header.at("latent_dim").get<std::size_t>();
        std::size_t i = 0;
        for (const auto& lj : header.at("layers")) {
            spec.layers.push_back(layer_from_json(lj, r, "layer " + std::to_string(i++)));
        }
        spec.rgb_head = layer_from_json(header.at("rgb_head"), r, "rgb_head");
    } catch (const nlohmann::json::exception& e) {
        r.fail(std::string("malformed header: ") + e.what());
    }
    try {
        spec.validate();
    } catch (const ShapeError& e) {
        r.fail(e.what());
    }

    std::vector<LayerWeights> weights;
    weights.reserve(spec.layers.size() + 1);
    for (std::size_t i = 0; i <= spec.layers.size(); ++i) {
        const bool is_rgb = i == spec.layers.size();
        const LayerDesc& d = is_rgb ? spec.rgb_head : spec.layers[i];
        const std::string name = is_rgb ? std::string("rgb_head") : "layer " + std::to_string(i);
        LayerWeights lw;
        lw.weight = r.f32s(weight_count(d, spec.latent_dim), name + " weights");
        lw.bias = r.f32s(bias_count(d), name + " bias");
        weights.push_back(std::move(lw));
    }
    r.expect_end();
    return Generator(std::move(spec), std::move(weights), sha256(bytes));
}

Generator load_gwf_file(const std::filesystem::path& path) {
    const Bytes bytes = read_file(path);
    return load_gwf(bytes, path.string());
}

}  // namespace neuroprobe
