#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "neuroprobe/binio.hpp"
#include "neuroprobe/generator.hpp"
#include "neuroprobe/latents.hpp"

namespace neuroprobe {

inline constexpr std::string_view kPostActivation = "post_activation";

/// Monte Carlo activation counts for every neuron of every layer.
///
/// counts[i][n] is the number of sampled latents for which neuron n of layer
/// i (flattened channel, row, column) was > 0. The rate of a neuron is
/// counts / num_samples; integer counts keep the estimate exact and
/// independent of how samples were split across workers.
struct RateTable {
    std::vector<Shape3> layer_shapes;
    std::vector<std::vector<std::uint32_t>> counts;
    std::uint64_t num_samples = 0;
    std::uint64_t sampler_seed = 0;
    std::string sampler{kSamplerName};
    std::string convention{kPostActivation};
    Sha256 model_digest{};

    std::size_t num_layers() const noexcept { return counts.size(); }
    double rate(std::size_t layer, std::size_t neuron) const;

    // Zero-sample table shaped for `g`, the identity element of merge_counts.
    static RateTable empty_for(const Generator& g);

    friend bool operator==(const RateTable&, const RateTable&) = default;
};

// Estimates rates from latents sample_latent(seed, 0 .. num_samples-1).
RateTable estimate_rates(const Generator& g, std::size_t num_samples, std::uint64_t seed,
                         std::size_t threads = 0);

// Counts over an explicit latent batch (e.g. loaded from a GLZ1 file).
RateTable estimate_rates(const Generator& g, const LatentBatch& latents, std::size_t threads = 0);

// Counts over latents sample_latent(seed, first .. first+count-1); used for
// sharded estimation together with merge_counts.
RateTable estimate_rates_shard(const Generator& g, std::uint64_t seed, std::size_t first,
                               std::size_t count, std::size_t threads = 0);

// Adds up counts of two tables over disjoint sample batches of one model.
RateTable merge_counts(const RateTable& a, const RateTable& b);

// Throws DigestError unless the table was estimated on `g` with matching shapes.
void check_compatible(const RateTable& table, const Generator& g);

/// Bitmask over the neurons of one layer.
struct NeuronSet {
    std::size_t layer = 0;
    std::vector<std::uint8_t> mask;

    bool contains(std::size_t n) const { return mask[n] != 0; }
    std::size_t count() const;
};

// Neurons with rate <= threshold (low-rate neurons).
NeuronSet lr_set(const RateTable& table, std::size_t layer, double threshold);
// Neurons with rate > threshold; the complement of lr_set within the layer.
NeuronSet hr_set(const RateTable& table, std::size_t layer, double threshold);

// GRT1: "GRT1" | u32 LE header length | JSON {num_samples, sampler_seed,
// sampler, model_digest, convention, layer_shapes} | per layer u32 LE counts.
Bytes write_grt(const RateTable& table);
RateTable read_grt(std::span<const std::uint8_t> bytes, const std::string& context = "GRT1");

}  // namespace neuroprobe
