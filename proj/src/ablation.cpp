#include "neuroprobe/ablation.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <random>

#include "neuroprobe/error.hpp"
#include "neuroprobe/latents.hpp"

namespace neuroprobe {

std::optional<AblationPreset> find_preset(std::string_view name) {
    if (name == "pggan-early") return AblationPreset{"pggan-early", {1, 3, 5}, 0.3};
    if (name == "style2-early") return AblationPreset{"style2-early", {0, 1, 3}, 0.3};
    return std::nullopt;
}

AblationPreset default_preset_for(const GeneratorSpec& spec) {
    const std::size_t depth = spec.num_layers();
    if (depth == 9) return *find_preset("pggan-early");
    if (depth == 8) return *find_preset("style2-early");
    for (const char* name : {"style2-early", "pggan-early"}) {
        AblationPreset p = *find_preset(name);
        if (std::all_of(p.layers.begin(), p.layers.end(), [&](std::size_t l) { return l < depth; })) {
            return p;
        }
    }
    throw ContractError("no ablation preset fits a " + std::to_string(depth) + "-layer generator");
}

std::size_t zero_activated(Tensor3& t, const NeuronSet& set) {
    auto values = t.values();
    if (set.mask.size() != values.size()) {
        throw ShapeError("neuron set size does not match featuremap size");
    }
    std::size_t zeroed = 0;
    for (std::size_t n = 0; n < values.size(); ++n) {
        if (set.mask[n] && values[n] > 0.0f) {
            values[n] = 0.0f;
            ++zeroed;
        }
    }
    return zeroed;
}

AblationPlan::AblationPlan(const Generator& g, const RateTable* rates, AblationConfig cfg)
    : gen_(&g), cfg_(std::move(cfg)), sets_(g.num_layers()) {
    for (std::size_t layer : cfg_.target_layers) {
        if (layer >= g.num_layers()) {
            throw ContractError("invalid ablation layer index " + std::to_string(layer) + " (generator has " +
                                std::to_string(g.num_layers()) + " layers)");
        }
    }
    if (cfg_.mode == AblationMode::Random) {
        if (!(cfg_.random_p >= 0.0 && cfg_.random_p <= 1.0)) {
            throw ContractError("random ablation probability must be in [0,1]");
        }
        return;
    }
    if (rates == nullptr) throw ContractError("rate-based ablation needs a rate table");
    check_compatible(*rates, g);
    for (std::size_t layer : cfg_.target_layers) {
        sets_[layer] = cfg_.mode == AblationMode::LowRate ? lr_set(*rates, layer, cfg_.threshold)
                                                          : hr_set(*rates, layer, cfg_.threshold);
    }
}

bool AblationPlan::targets(std::size_t layer) const {
    return std::find(cfg_.target_layers.begin(), cfg_.target_layers.end(), layer) != cfg_.target_layers.end();
}

const NeuronSet& AblationPlan::neuron_set(std::size_t layer) const {
    if (layer >= sets_.size() || !sets_[layer]) {
        throw ContractError("layer " + std::to_string(layer) + " has no rate-based neuron set in this plan");
    }
    return *sets_[layer];
}

Tensor3 AblationPlan::apply(std::size_t layer, Tensor3 t, std::uint64_t call_seed) const {
    if (!targets(layer)) return t;
    if (cfg_.mode != AblationMode::Random) {
        zero_activated(t, *sets_[layer]);
        return t;
    }
    std::mt19937_64 engine(splitmix64(splitmix64(cfg_.random_seed ^ splitmix64(call_seed)) + layer));
    for (float& v : t.values()) {
        const double u = static_cast<double>(engine() >> 11) * 0x1.0p-53;
        if (u < cfg_.random_p && v > 0.0f) v = 0.0f;
    }
    return t;
}

LayerHook AblationPlan::hook(std::uint64_t call_seed) const {
    return [this, call_seed](std::size_t layer, Tensor3 t) { return apply(layer, std::move(t), call_seed); };
}

LayerTrace AblationPlan::run(std::span<const float> z, std::uint64_t call_seed) const {
    if (cfg_.target_layers.empty()) return gen_->forward(z);
    return gen_->forward_hooked(z, hook(call_seed));
}

LayerTrace sequential_ablate(const Generator& g, const RateTable& rates, const AblationConfig& cfg,
                             std::span<const float> z) {
    return AblationPlan(g, &rates, cfg).run(z);
}

LayerTrace single_ablate(const Generator& g, const RateTable& rates, std::size_t layer, double threshold,
                         std::span<const float> z) {
    AblationConfig cfg;
    cfg.target_layers = {layer};
    cfg.threshold = threshold;
    cfg.mode = AblationMode::LowRate;
    return sequential_ablate(g, rates, cfg, z);
}

LayerTrace random_ablate(const Generator& g, double p, std::uint64_t seed, std::span<const float> z,
                         std::span<const std::size_t> layers) {
    AblationConfig cfg;
    cfg.target_layers.assign(layers.begin(), layers.end());
    cfg.mode = AblationMode::Random;
    cfg.random_p = p;
    cfg.random_seed = seed;
    return AblationPlan(g, nullptr, cfg).run(z);
}

AblationMode parse_mode(std::string_view text, double* random_p) {
    if (text == "lr") return AblationMode::LowRate;
    if (text == "hr") return AblationMode::HighRate;
    constexpr std::string_view prefix = "random:";
    if (text.starts_with(prefix)) {
        const std::string num(text.substr(prefix.size()));
        std::size_t used = 0;
        double p = -1.0;
        try {
            p = std::stod(num, &used);
        } catch (...) {
            used = 0;
        }
        if (used != num.size() || !(p >= 0.0 && p <= 1.0)) {
            throw ContractError("random ablation probability must be a number in [0,1], got \"" + num + "\"");
        }
        if (random_p) *random_p = p;
        return AblationMode::Random;
    }
    throw ContractError("unknown ablation mode \"" + std::string(text) + "\" (expected lr, hr or random:<p>)");
}

std::string mode_name(const AblationConfig& cfg) {
    switch (cfg.mode) {
        case AblationMode::LowRate: return "lr";
        case AblationMode::HighRate: return "hr";
        case AblationMode::Random: {
            // Shortest form that parses back to the same double.
            char buf[32];
            const auto res = std::to_chars(buf, buf + sizeof buf, cfg.random_p);
            return "random:" + std::string(buf, res.ptr);
        }
    }
    return "lr";
}

}  // namespace neuroprobe
