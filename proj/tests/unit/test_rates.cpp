#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "models.hpp"
#include "neuroprobe/error.hpp"
#include "neuroprobe/gwf.hpp"
#include "neuroprobe/rates.hpp"

using namespace neuroprobe;
using namespace neuroprobe::testing;

namespace {

// Latent projection only: neuron 0 has pre-activation +5, neuron 1 has -5,
// neuron 2 equals z0; everything else is -1.
Generator sign_probe() {
    GeneratorSpec spec;
    spec.latent_dim = 2;
    spec.layers.push_back({LayerKind::LatentProject, 2, 1, 1, false, 0.2f, false});
    spec.rgb_head = {LayerKind::ConvBlock, 1, 3, 1, false, 0.0f, false};
    LayerWeights l0{std::vector<float>(32, 0.0f), std::vector<float>(16, -1.0f)};
    l0.bias[0] = 5.0f;
    l0.bias[1] = -5.0f;
    l0.bias[2] = 0.0f;
    l0.weight[2 * 2 + 0] = 1.0f;
    LayerWeights rgb{{1, 1, 1}, {0, 0, 0}};
    return load_gwf(write_gwf(spec, std::vector<LayerWeights>{l0, rgb}));
}

RateTable table_with_counts(std::vector<std::uint32_t> counts, std::uint64_t n) {
    RateTable t;
    t.layer_shapes = {{counts.size(), 1, 1}};
    t.counts = {std::move(counts)};
    t.num_samples = n;
    return t;
}

std::vector<std::size_t> members(const NeuronSet& s) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < s.mask.size(); ++i)
        if (s.contains(i)) out.push_back(i);
    return out;
}

}  // namespace

TEST_CASE("always-on and always-off neurons") {
    const Generator g = sign_probe();
    const RateTable t = estimate_rates(g, 500, 1);
    CHECK(t.rate(0, 0) == 1.0);
    CHECK(t.rate(0, 1) == 0.0);
    CHECK(t.num_samples == 500);
}

TEST_CASE("a neuron following sign(z0) has rate near 1/2") {
    // Binomial(10000, 0.5): sd = 0.005, so [0.47, 0.53] is a 6-sigma band.
    const RateTable t = estimate_rates(sign_probe(), 10000, 2024);
    CHECK(t.rate(0, 2) >= 0.47);
    CHECK(t.rate(0, 2) <= 0.53);
}

TEST_CASE("counts equal a direct recount over the same latents") {
    const Generator g = make_toy3();
    const LatentBatch batch = LatentBatch::sample(8, 64, g.spec().latent_dim);
    const RateTable t = estimate_rates(g, batch, 3);
    std::vector<std::vector<std::uint32_t>> recount(g.num_layers());
    for (std::size_t i = 0; i < g.num_layers(); ++i) recount[i].assign(g.spec().layer_shape(i).size(), 0);
    for (std::size_t s = 0; s < batch.count; ++s) {
        const LayerTrace tr = g.forward(batch.row(s));
        for (std::size_t i = 0; i < tr.layers.size(); ++i)
            for (std::size_t n = 0; n < tr.layers[i].size(); ++n) recount[i][n] += tr.layers[i].values()[n] > 0.0f;
    }
    CHECK(t.counts == recount);
    // A batch drawn from a seed gives the same counts as sampling that seed directly.
    CHECK(estimate_rates(g, 64, 8, 2).counts == t.counts);
}

TEST_CASE("estimation is independent of the worker count and of sharding") {
    const Generator g = make_toy5();
    const RateTable one = estimate_rates(g, 101, 42, 1);
    const RateTable four = estimate_rates(g, 101, 42, 4);
    CHECK(one == four);

    const RateTable merged = merge_counts(estimate_rates_shard(g, 42, 0, 60, 2), estimate_rates_shard(g, 42, 60, 41, 3));
    CHECK(merged == one);
}

TEST_CASE("merge_counts") {
    const Generator g = make_toy3();
    const RateTable t = estimate_rates(g, 10, 1);
    CHECK(merge_counts(t, RateTable::empty_for(g)) == t);
    CHECK(merge_counts(RateTable::empty_for(g), t) == t);

    const RateTable a = estimate_rates_shard(g, 9, 0, 1);
    const RateTable b = estimate_rates_shard(g, 9, 1, 1);
    CHECK(merge_counts(a, b).counts == estimate_rates(g, 2, 9).counts);

    CHECK_THROWS_AS(merge_counts(t, RateTable::empty_for(make_toy5())), DigestError);
}

TEST_CASE("lr_set and hr_set thresholds") {
    const RateTable t = table_with_counts({1, 3, 9}, 10);
    CHECK(members(lr_set(t, 0, 0.3)) == std::vector<std::size_t>{0, 1});
    CHECK(members(hr_set(t, 0, 0.3)) == std::vector<std::size_t>{2});
    CHECK(lr_set(t, 0, 1.0).count() == 3);
    CHECK(lr_set(t, 0, 0.0).count() == 0);
    CHECK(hr_set(t, 0, 0.0).count() == 3);

    const RateTable sparse = table_with_counts({0, 0, 4}, 10);
    CHECK(members(hr_set(sparse, 0, 0.0)) == std::vector<std::size_t>{2});

    CHECK_THROWS_AS(lr_set(t, 1, 0.3), ContractError);
}

TEST_CASE("LR and HR sets partition a layer and nest in R") {
    std::mt19937 rng(77);
    std::uniform_int_distribution<std::uint32_t> count(0, 50);
    std::uniform_real_distribution<double> r(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<std::uint32_t> c(40);
        for (auto& v : c) v = count(rng);
        const RateTable t = table_with_counts(c, 50);
        double r1 = r(rng), r2 = r(rng);
        if (r1 > r2) std::swap(r1, r2);
        const NeuronSet lo1 = lr_set(t, 0, r1), lo2 = lr_set(t, 0, r2), hi1 = hr_set(t, 0, r1);
        for (std::size_t n = 0; n < c.size(); ++n) {
            CHECK(lo1.contains(n) != hi1.contains(n));
            if (lo1.contains(n)) CHECK(lo2.contains(n));
        }
    }
}

TEST_CASE("GRT1 round trip and validation") {
    const Generator g = make_toy3();
    const RateTable t = estimate_rates(g, 25, 3);
    const Bytes bytes = write_grt(t);
    CHECK(read_grt(bytes) == t);
    CHECK(write_grt(read_grt(bytes)) == bytes);
    check_compatible(read_grt(bytes), g);
    CHECK_THROWS_AS(check_compatible(t, make_toy5()), DigestError);

    Bytes bad = bytes;
    bad[0] = 'X';
    CHECK_THROWS_AS(read_grt(bad), FormatError);
    Bytes truncated(bytes.begin(), bytes.end() - 2);
    CHECK_THROWS_AS(read_grt(truncated), FormatError);

    RateTable over = t;
    over.counts[0][0] = 26;
    CHECK_THROWS_WITH_AS(read_grt(write_grt(over)), doctest::Contains("exceeds num_samples"), FormatError);
}

TEST_CASE("GLZ1 round trip") {
    const LatentBatch b = LatentBatch::sample(5, 7, 3);
    const LatentBatch back = read_glz(write_glz(b));
    CHECK(back.dim == 3);
    CHECK(back.count == 7);
    CHECK(back.data == b.data);
    Bytes bytes = write_glz(b);
    bytes.pop_back();
    CHECK_THROWS_AS(read_glz(bytes), FormatError);
}

TEST_CASE("latent sampler is deterministic and standard normal") {
    CHECK(sample_latent(3, 10, 5) == sample_latent(3, 10, 5));
    CHECK(sample_latent(3, 10, 5) != sample_latent(3, 11, 5));
    CHECK(sample_latent(3, 10, 5) != sample_latent(4, 10, 5));

    double sum = 0, sq = 0;
    const std::size_t n = 20000;
    for (std::size_t i = 0; i < n / 4; ++i) {
        for (float v : sample_latent(1, i, 4)) {
            sum += v;
            sq += double(v) * v;
        }
    }
    const double mean = sum / n;
    CHECK(std::abs(mean) < 0.05);
    CHECK(std::abs(sq / n - mean * mean - 1.0) < 0.05);
}
