#pragma once

#include <filesystem>
#include <span>
#include <string>

#include "neuroprobe/binio.hpp"
#include "neuroprobe/generator.hpp"

namespace neuroprobe {

// GWF v1 generator weight file:
//   "GWF1" | u32 LE header length | JSON header | per layer (then rgb_head):
//   weight array, bias array as f32 LE, row-major.
//
// The JSON header holds {format_version, latent_dim, layers:[...], rgb_head}
// where each layer is {kind, in_ch, out_ch, kernel, upsample_before,
// activation_slope, pixelnorm_after} and kind is "latent_project" or
// "conv_block".

Bytes write_gwf(const GeneratorSpec& spec, std::span<const LayerWeights> weights);
Bytes write_gwf(const Generator& g);

// The resulting generator's digest is the SHA-256 of `bytes`.
Generator load_gwf(std::span<const std::uint8_t> bytes, const std::string& context = "GWF");
Generator load_gwf_file(const std::filesystem::path& path);

}  // namespace neuroprobe
