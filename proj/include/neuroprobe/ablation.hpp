#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "neuroprobe/generator.hpp"
#include "neuroprobe/rates.hpp"

namespace neuroprobe {

enum class AblationMode {
    LowRate,   // zero activated neurons with rate <= R
    HighRate,  // zero activated neurons with rate > R
    Random,    // zero each activated neuron with probability p
};

struct AblationConfig {
    std::vector<std::size_t> target_layers;
    double threshold = 0.3;
    AblationMode mode = AblationMode::LowRate;
    double random_p = 0.3;
    std::uint64_t random_seed = 0;
};

struct AblationPreset {
    std::string_view name;
    std::vector<std::size_t> layers;
    double threshold;
};

// "pggan-early" (layers 1,3,5) and "style2-early" (layers 0,1,3), both R = 0.3.
std::optional<AblationPreset> find_preset(std::string_view name);
// style2-early for 8-layer generators, pggan-early for 9-layer ones; for
// other depths, the first preset whose layers all exist.
AblationPreset default_preset_for(const GeneratorSpec& spec);

// Zeroes every element of `t` that is > 0 and selected by `set`; returns how
// many were zeroed.
std::size_t zero_activated(Tensor3& t, const NeuronSet& set);

/// Ablation hook built once per (generator, rates, config) and reusable for
/// any number of latents.
///
/// For LowRate/HighRate the per-layer neuron sets are fixed at construction.
/// Random mode draws a Bernoulli(p) mask for every neuron of a target layer on
/// each call, from an engine seeded by (random_seed, call_seed, layer).
class AblationPlan {
public:
    AblationPlan(const Generator& g, const RateTable* rates, AblationConfig cfg);

    const AblationConfig& config() const noexcept { return cfg_; }
    bool targets(std::size_t layer) const;

    // `call_seed` varies the Random-mode masks between latents of a batch.
    LayerHook hook(std::uint64_t call_seed = 0) const;
    LayerTrace run(std::span<const float> z, std::uint64_t call_seed = 0) const;

    // Neuron set ablated at `layer` for LowRate/HighRate plans.
    const NeuronSet& neuron_set(std::size_t layer) const;

private:
    Tensor3 apply(std::size_t layer, Tensor3 t, std::uint64_t call_seed) const;

    const Generator* gen_;
    AblationConfig cfg_;
    std::vector<std::optional<NeuronSet>> sets_;
};

// Algorithm: forward pass that zeroes the activated neurons of the configured
// set at each target layer before the next layer consumes them.
LayerTrace sequential_ablate(const Generator& g, const RateTable& rates, const AblationConfig& cfg,
                             std::span<const float> z);

LayerTrace single_ablate(const Generator& g, const RateTable& rates, std::size_t layer, double threshold,
                         std::span<const float> z);

LayerTrace random_ablate(const Generator& g, double p, std::uint64_t seed, std::span<const float> z,
                         std::span<const std::size_t> layers);

AblationMode parse_mode(std::string_view text, double* random_p);
std::string mode_name(const AblationConfig& cfg);

}  // namespace neuroprobe
