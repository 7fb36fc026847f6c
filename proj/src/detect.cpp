#include "neuroprobe/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "neuroprobe/error.hpp"

namespace neuroprobe {

ArtifactScorer::ArtifactScorer(const RateTable& rates, std::vector<std::size_t> layers, double threshold)
    : layers_(std::move(layers)) {
    for (std::size_t layer : layers_) {
        sets_.push_back(lr_set(rates, layer, threshold));
        shapes_.push_back(rates.layer_shapes.at(layer));
    }
}

ArtifactScore ArtifactScorer::score(const LayerTrace& trace, std::size_t index) const {
    ArtifactScore s;
    s.index = index;
    s.layers = layers_;
    s.counts.reserve(layers_.size());
    for (std::size_t k = 0; k < layers_.size(); ++k) {
        const std::size_t layer = layers_[k];
        if (layer >= trace.layers.size() || trace.layers[layer].shape() != shapes_[k]) {
            throw ShapeError("trace layer " + std::to_string(layer) + " does not match the rate table");
        }
        const auto values = trace.layers[layer].values();
        const auto& mask = sets_[k].mask;
        std::uint64_t count = 0;
        for (std::size_t n = 0; n < values.size(); ++n) {
            count += (mask[n] && values[n] > 0.0f) ? 1 : 0;
        }
        s.counts.push_back(count);
        s.total += count;
    }
    return s;
}

ArtifactScore artifact_score(const LayerTrace& trace, const RateTable& rates, std::span<const std::size_t> layers,
                             double threshold, std::size_t index) {
    return ArtifactScorer(rates, {layers.begin(), layers.end()}, threshold).score(trace, index);
}

Ranking rank_images(std::span<const ArtifactScore> scores, std::size_t top_k, std::size_t bottom_k) {
    if (scores.empty()) throw ContractError("cannot rank an empty score list");
    if (top_k > scores.size() || bottom_k > scores.size()) {
        throw ContractError("top/bottom k exceeds the number of scores");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);

    Ranking r;
    auto by_total_desc = [&](std::size_t a, std::size_t b) {
        if (scores[a].total != scores[b].total) return scores[a].total > scores[b].total;
        return scores[a].index < scores[b].index;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_k), order.end(), by_total_desc);
    r.top.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(top_k));

    std::iota(order.begin(), order.end(), 0);
    auto by_total_asc = [&](std::size_t a, std::size_t b) {
        if (scores[a].total != scores[b].total) return scores[a].total < scores[b].total;
        return scores[a].index < scores[b].index;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(bottom_k), order.end(), by_total_asc);
    r.bottom.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(bottom_k));
    return r;
}

Heatmap heatmap(const LayerTrace& trace, const RateTable& rates, std::size_t layer, double threshold) {
    if (layer >= trace.layers.size()) throw ContractError("heatmap layer out of range");
    const Tensor3& f = trace.layers[layer];
    if (f.shape() != rates.layer_shapes.at(layer)) {
        throw ShapeError("trace layer " + std::to_string(layer) + " does not match the rate table");
    }
    const NeuronSet lr = lr_set(rates, layer, threshold);
    const std::size_t plane = f.height() * f.width();
    Heatmap map{f.height(), f.width(), std::vector<float>(plane, 0.0f)};
    const auto values = f.values();
    for (std::size_t p = 0; p < plane; ++p) {
        std::size_t active = 0, rare = 0;
        for (std::size_t c = 0; c < f.channels(); ++c) {
            const std::size_t n = c * plane + p;
            if (values[n] > 0.0f) {
                ++active;
                rare += lr.mask[n];
            }
        }
        map.values[p] = active == 0 ? 0.0f : static_cast<float>(static_cast<double>(rare) / static_cast<double>(active));
    }
    return map;
}

RgbImage render_overlay(const Tensor3& image, const Heatmap& map) {
    RgbImage out = grayscale(to_rgb8(image));
    if (map.height == 0 || map.width == 0) return out;
    const double sy = static_cast<double>(map.height) / static_cast<double>(out.height);
    const double sx = static_cast<double>(map.width) / static_cast<double>(out.width);

    auto sample = [&](double fy, double fx) {
        fy = std::clamp(fy, 0.0, static_cast<double>(map.height - 1));
        fx = std::clamp(fx, 0.0, static_cast<double>(map.width - 1));
        const auto y0 = static_cast<std::size_t>(fy);
        const auto x0 = static_cast<std::size_t>(fx);
        const std::size_t y1 = std::min(y0 + 1, map.height - 1);
        const std::size_t x1 = std::min(x0 + 1, map.width - 1);
        const double ty = fy - static_cast<double>(y0);
        const double tx = fx - static_cast<double>(x0);
        const double top = map.at(y0, x0) * (1 - tx) + map.at(y0, x1) * tx;
        const double bot = map.at(y1, x0) * (1 - tx) + map.at(y1, x1) * tx;
        return top * (1 - ty) + bot * ty;
    };

    for (std::size_t y = 0; y < out.height; ++y) {
        for (std::size_t x = 0; x < out.width; ++x) {
            const double h = std::clamp(sample((y + 0.5) * sy - 0.5, (x + 0.5) * sx - 0.5), 0.0, 1.0);
            if (h == 0.0) continue;
            const double alpha = 0.5 * h;
            std::uint8_t* p = out.at(x, y);
            const double g = p[0];
            p[0] = static_cast<std::uint8_t>(std::lround(g * (1 - alpha) + 255.0 * alpha));
            p[1] = static_cast<std::uint8_t>(std::lround(g * (1 - alpha)));
            p[2] = p[1];
        }
    }
    return out;
}

std::string scores_to_csv(std::span<const ArtifactScore> scores) {
    std::string out = "index";
    const std::vector<std::size_t> layers = scores.empty() ? std::vector<std::size_t>{} : scores[0].layers;
    for (std::size_t l : layers) out += ",layer_" + std::to_string(l);
    out += ",total\n";
    for (const ArtifactScore& s : scores) {
        out += std::to_string(s.index);
        for (std::uint64_t c : s.counts) out += "," + std::to_string(c);
        out += "," + std::to_string(s.total) + "\n";
    }
    return out;
}

}  // namespace neuroprobe
