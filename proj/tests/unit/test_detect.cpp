#include <algorithm>
#include <numeric>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "models.hpp"
#include "neuroprobe/detect.hpp"
#include "neuroprobe/error.hpp"

using namespace neuroprobe;
using namespace neuroprobe::testing;

namespace {

RateTable table(Shape3 shape, std::vector<std::uint32_t> counts, std::uint64_t n) {
    RateTable t;
    t.layer_shapes = {shape};
    t.counts = {std::move(counts)};
    t.num_samples = n;
    return t;
}

LayerTrace trace_of(Tensor3 layer) {
    LayerTrace t;
    t.layers.push_back(std::move(layer));
    t.image = Tensor3({3, 4, 4});
    return t;
}

ArtifactScore with_total(std::size_t index, std::uint64_t total) {
    ArtifactScore s;
    s.index = index;
    s.layers = {0};
    s.counts = {total};
    s.total = total;
    return s;
}

}  // namespace

TEST_CASE("artifact score counts activated low-rate neurons") {
    // Rates 0.1, 0.5, 0.2 at R = 0.3: neurons 0 and 2 are low-rate.
    const RateTable rates = table({3, 1, 1}, {1, 5, 2}, 10);
    const std::size_t layers[] = {0};
    CHECK(artifact_score(trace_of(Tensor3({3, 1, 1}, {1.0f, 1.0f, 1.0f})), rates, layers, 0.3).total == 2);
    CHECK(artifact_score(trace_of(Tensor3({3, 1, 1}, {0.0f, 1.0f, -2.0f})), rates, layers, 0.3).total == 0);
    CHECK(artifact_score(trace_of(Tensor3({3, 1, 1}, {0.5f, -1.0f, 0.0f})), rates, layers, 0.3).total == 1);
    CHECK(artifact_score(trace_of(Tensor3({3, 1, 1}, {1.0f, 1.0f, 1.0f})), rates, layers, 1.0).total == 3);
}

TEST_CASE("artifact score sums over several layers") {
    const Generator g = make_toy5();
    const RateTable rates = estimate_rates(g, 200, 3);
    const std::size_t layers[] = {0, 1, 3};
    const LayerTrace t = g.forward(sample_latent(6, 0, 8));
    const ArtifactScore s = artifact_score(t, rates, layers, 0.3, 17);
    CHECK(s.index == 17);
    CHECK(s.layers == std::vector<std::size_t>{0, 1, 3});
    REQUIRE(s.counts.size() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        const NeuronSet lr = lr_set(rates, layers[k], 0.3);
        std::uint64_t expect = 0;
        for (std::size_t n = 0; n < lr.mask.size(); ++n) expect += lr.contains(n) && t.layers[layers[k]].values()[n] > 0;
        CHECK(s.counts[k] == expect);
    }
    CHECK(s.total == s.counts[0] + s.counts[1] + s.counts[2]);
}

TEST_CASE("artifact score is monotone in the threshold") {
    const Generator g = make_toy5();
    const RateTable rates = estimate_rates(g, 200, 3);
    const std::size_t layers[] = {0, 1, 3};
    std::mt19937 rng(4);
    std::uniform_real_distribution<double> r(0.0, 1.0);
    for (int i = 0; i < 30; ++i) {
        const LayerTrace t = g.forward(sample_latent(12, static_cast<std::uint64_t>(i), 8));
        double r1 = r(rng), r2 = r(rng);
        if (r1 > r2) std::swap(r1, r2);
        CHECK(artifact_score(t, rates, layers, r1).total <= artifact_score(t, rates, layers, r2).total);
    }
}

TEST_CASE("rank_images orders by total with ascending-index ties") {
    const std::vector<ArtifactScore> s = {with_total(0, 5), with_total(1, 9), with_total(2, 5), with_total(3, 0),
                                          with_total(4, 9)};
    const Ranking r = rank_images(s, 3, 2);
    CHECK(r.top == std::vector<std::size_t>{1, 4, 0});
    CHECK(r.bottom == std::vector<std::size_t>{3, 0});

    CHECK(rank_images(s, 0, 0).top.empty());
    CHECK_THROWS_AS(rank_images(s, 6, 0), ContractError);
    CHECK_THROWS_AS(rank_images(std::span<const ArtifactScore>{}, 0, 0), ContractError);
}

TEST_CASE("rank_images agrees with a full sort and ignores input order") {
    std::mt19937 rng(21);
    std::uniform_int_distribution<std::uint64_t> total(0, 6);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<ArtifactScore> s;
        for (std::size_t i = 0; i < 30; ++i) s.push_back(with_total(i, total(rng)));
        std::vector<std::size_t> sorted(s.size());
        std::iota(sorted.begin(), sorted.end(), 0);
        std::stable_sort(sorted.begin(), sorted.end(), [&](auto a, auto b) { return s[a].total > s[b].total; });
        const Ranking r = rank_images(s, 10, 10);
        CHECK(r.top == std::vector<std::size_t>(sorted.begin(), sorted.begin() + 10));

        std::vector<ArtifactScore> shuffled = s;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const Ranking rs = rank_images(shuffled, 10, 10);
        for (std::size_t k = 0; k < 10; ++k) {
            CHECK(shuffled[rs.top[k]].index == s[r.top[k]].index);
            CHECK(shuffled[rs.bottom[k]].index == s[r.bottom[k]].index);
        }
    }
}

TEST_CASE("heatmap is the per-pixel low-rate share of activated channels") {
    // 2 channels on a 1x2 grid; channel 0 is low-rate everywhere.
    const RateTable rates = table({2, 1, 2}, {1, 1, 9, 9}, 10);
    const LayerTrace t = trace_of(Tensor3({2, 1, 2}, {1.0f, 1.0f, 1.0f, -1.0f}));
    const Heatmap h = heatmap(t, rates, 0, 0.3);
    CHECK(h.height == 1);
    CHECK(h.width == 2);
    CHECK(h.at(0, 0) == 0.5f);
    CHECK(h.at(0, 1) == 1.0f);

    const LayerTrace quiet = trace_of(Tensor3({2, 1, 2}, -1.0f));
    CHECK(heatmap(quiet, rates, 0, 0.3).values == std::vector<float>{0.0f, 0.0f});
    CHECK_THROWS_AS(heatmap(t, rates, 1, 0.3), ContractError);
}

TEST_CASE("heatmap numerators sum to the layer score") {
    const Generator g = make_toy5();
    const RateTable rates = estimate_rates(g, 200, 3);
    for (std::uint64_t i = 0; i < 5; ++i) {
        const LayerTrace t = g.forward(sample_latent(40, i, 8));
        for (std::size_t layer : {0, 1, 3}) {
            const Heatmap h = heatmap(t, rates, layer, 0.3);
            const Tensor3& f = t.layers[layer];
            double rare = 0;
            for (std::size_t y = 0; y < h.height; ++y) {
                for (std::size_t x = 0; x < h.width; ++x) {
                    std::size_t active = 0;
                    for (std::size_t c = 0; c < f.channels(); ++c) active += f.at(c, y, x) > 0.0f;
                    rare += h.at(y, x) * double(active);
                }
            }
            const std::size_t l[] = {layer};
            CHECK(rare == doctest::Approx(double(artifact_score(t, rates, l, 0.3).total)).epsilon(1e-6));
        }
    }
}

TEST_CASE("overlay") {
    std::mt19937 rng(2);
    const Tensor3 image = random_tensor({3, 8, 8}, rng);
    const RgbImage gray = grayscale(to_rgb8(image));

    Heatmap zero{2, 2, std::vector<float>(4, 0.0f)};
    CHECK(render_overlay(image, zero) == gray);

    Heatmap one{2, 2, std::vector<float>(4, 1.0f)};
    const RgbImage hot = render_overlay(image, one);
    for (std::size_t y = 0; y < 8; ++y) {
        for (std::size_t x = 0; x < 8; ++x) {
            const double g = gray.at(x, y)[0];
            CHECK(hot.at(x, y)[0] == std::lround(0.5 * g + 127.5));
            CHECK(hot.at(x, y)[1] == std::lround(0.5 * g));
        }
    }

    // A single hot cell in the lower-right quadrant pulls the red excess there.
    Heatmap cell{4, 4, std::vector<float>(16, 0.0f)};
    cell.values[3 * 4 + 3] = 1.0f;
    const RgbImage o = render_overlay(Tensor3({3, 16, 16}, 0.0f), cell);
    double sx = 0, sy = 0, mass = 0;
    for (std::size_t y = 0; y < 16; ++y) {
        for (std::size_t x = 0; x < 16; ++x) {
            const double w = double(o.at(x, y)[0]) - o.at(x, y)[1];
            sx += w * x;
            sy += w * y;
            mass += w;
        }
    }
    REQUIRE(mass > 0);
    CHECK(sx / mass > 12.0);
    CHECK(sy / mass > 12.0);
}

TEST_CASE("scores csv") {
    ArtifactScore a;
    a.index = 4;
    a.layers = {0, 3};
    a.counts = {2, 5};
    a.total = 7;
    ArtifactScore b = a;
    b.index = 1;
    b.counts = {0, 1};
    b.total = 1;
    const std::vector<ArtifactScore> s = {a, b};
    CHECK(scores_to_csv(s) == "index,layer_0,layer_3,total\n4,2,5,7\n1,0,1,1\n");
}
