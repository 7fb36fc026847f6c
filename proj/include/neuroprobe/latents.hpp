#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "neuroprobe/binio.hpp"

namespace neuroprobe {

// Name recorded in rate tables and manifests for latents drawn by
// sample_latent(). Bump the suffix if the draw procedure ever changes.
inline constexpr std::string_view kSamplerName = "mt19937_64-boxmuller-v1";

/// Deterministic standard-normal latent number `index` of the stream `seed`.
///
/// Each latent gets its own mt19937_64 engine seeded with a SplitMix64 hash of
/// (seed, index), so any latent can be regenerated independently of how a
/// batch is partitioned across workers. Normals come from the Box-Muller
/// transform over 53-bit uniforms.
std::vector<float> sample_latent(std::uint64_t seed, std::uint64_t index, std::size_t dim);

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// A batch of latent codes, row-major count x dim.
struct LatentBatch {
    std::size_t dim = 0;
    std::size_t count = 0;
    std::vector<float> data;

    std::span<const float> row(std::size_t i) const { return {data.data() + i * dim, dim}; }

    static LatentBatch sample(std::uint64_t seed, std::size_t count, std::size_t dim);
};

// GLZ1: "GLZ1" | u32 LE header length | JSON {dim, count} | f32 LE payload.
Bytes write_glz(const LatentBatch& batch);
LatentBatch read_glz(std::span<const std::uint8_t> bytes, const std::string& context = "GLZ1");

}  // namespace neuroprobe
