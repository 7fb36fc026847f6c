#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "neuroprobe/generator.hpp"
#include "neuroprobe/image.hpp"
#include "neuroprobe/rates.hpp"

namespace neuroprobe {

/// Number of activated low-rate neurons per target layer for one image.
struct ArtifactScore {
    std::size_t index = 0;              // latent index the trace came from
    std::vector<std::size_t> layers;    // target layers, in request order
    std::vector<std::uint64_t> counts;  // one per entry of `layers`
    std::uint64_t total = 0;
};

/// Scores traces against fixed LR sets (rate <= R) of the target layers.
/// Build once, score many traces; score() is const and thread-safe.
class ArtifactScorer {
public:
    ArtifactScorer(const RateTable& rates, std::vector<std::size_t> layers, double threshold);

    ArtifactScore score(const LayerTrace& trace, std::size_t index = 0) const;
    const std::vector<std::size_t>& layers() const noexcept { return layers_; }

private:
    std::vector<std::size_t> layers_;
    std::vector<NeuronSet> sets_;
    std::vector<Shape3> shapes_;
};

ArtifactScore artifact_score(const LayerTrace& trace, const RateTable& rates, std::span<const std::size_t> layers,
                             double threshold, std::size_t index = 0);

struct Ranking {
    std::vector<std::size_t> top;     // positions in the input, highest total first
    std::vector<std::size_t> bottom;  // positions in the input, lowest total first
};

// Ties are broken by ascending ArtifactScore::index in both lists.
Ranking rank_images(std::span<const ArtifactScore> scores, std::size_t top_k, std::size_t bottom_k);

/// Per-pixel fraction of activated channels that are low-rate neurons, on the
/// layer's own spatial grid. Pixels with no activated channel are 0.
struct Heatmap {
    std::size_t height = 0;
    std::size_t width = 0;
    std::vector<float> values;

    float at(std::size_t y, std::size_t x) const { return values[y * width + x]; }
};

Heatmap heatmap(const LayerTrace& trace, const RateTable& rates, std::size_t layer, double threshold);

/// Overlays a heatmap on the grayscale version of `image`.
///
/// The map is bilinearly resampled to the image size (pixel centres aligned,
/// edges clamped). Each pixel is blended towards pure red (255,0,0) with
/// alpha = 0.5 * h, so h = 0 leaves the grayscale pixel untouched and h = 1
/// gives the strongest overlay.
RgbImage render_overlay(const Tensor3& image, const Heatmap& map);

// "index,layer_<i>...,total" header, then one row per score in input order.
std::string scores_to_csv(std::span<const ArtifactScore> scores);

}  // namespace neuroprobe
