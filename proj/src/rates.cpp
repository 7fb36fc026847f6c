#include "neuroprobe/rates.hpp"

#include <algorithm>
#include <limits>

#include "neuroprobe/error.hpp"
#include "neuroprobe/parallel.hpp"

namespace neuroprobe {

double RateTable::rate(std::size_t layer, std::size_t neuron) const {
    if (num_samples == 0) throw ContractError("rate table has no samples");
    return static_cast<double>(counts.at(layer).at(neuron)) / static_cast<double>(num_samples);
}

RateTable RateTable::empty_for(const Generator& g) {
    RateTable t;
    t.layer_shapes = g.spec().layer_shapes();
    for (const Shape3& s : t.layer_shapes) t.counts.emplace_back(s.size(), 0u);
    t.model_digest = g.digest();
    return t;
}

namespace {

template <typename LatentAt>
RateTable count_activations(const Generator& g, std::size_t count, std::size_t threads,
                            LatentAt&& latent_at) {
    if (count > std::numeric_limits<std::uint32_t>::max()) {
        throw ContractError("sample count exceeds the u32 counter range");
    }
    if (threads == 0) threads = default_thread_count();
    threads = std::max<std::size_t>(1, std::min(threads, count));

    std::vector<RateTable> partial(threads, RateTable::empty_for(g));
    parallel_chunks(count, threads, [&](std::size_t begin, std::size_t end, std::size_t worker) {
        RateTable& local = partial[worker];
        for (std::size_t s = begin; s < end; ++s) {
            const auto z = latent_at(s);
            const LayerTrace trace = g.forward(z);
            for (std::size_t i = 0; i < trace.layers.size(); ++i) {
                const auto values = trace.layers[i].values();
                auto& c = local.counts[i];
                for (std::size_t n = 0; n < values.size(); ++n) {
                    c[n] += values[n] > 0.0f ? 1u : 0u;
                }
            }
        }
        local.num_samples = end - begin;
    });

    RateTable total = RateTable::empty_for(g);
    for (const RateTable& p : partial) total = merge_counts(total, p);
    return total;
}

}  // namespace

RateTable estimate_rates_shard(const Generator& g, std::uint64_t seed, std::size_t first,
                               std::size_t count, std::size_t threads) {
    const std::size_t dim = g.spec().latent_dim;
    RateTable t = count_activations(g, count, threads, [&](std::size_t s) {
        return sample_latent(seed, first + s, dim);
    });
    t.sampler_seed = seed;
    return t;
}

RateTable estimate_rates(const Generator& g, std::size_t num_samples, std::uint64_t seed,
                         std::size_t threads) {
    if (num_samples == 0) throw ContractError("num_samples must be >= 1");
    return estimate_rates_shard(g, seed, 0, num_samples, threads);
}

RateTable estimate_rates(const Generator& g, const LatentBatch& latents, std::size_t threads) {
    if (latents.count == 0) throw ContractError("latent batch is empty");
    if (latents.dim != g.spec().latent_dim) {
        throw ShapeError("latent batch dim " + std::to_string(latents.dim) + " != generator latent_dim " +
                         std::to_string(g.spec().latent_dim));
    }
    RateTable t = count_activations(g, latents.count, threads, [&](std::size_t s) {
        const auto row = latents.row(s);
        return std::vector<float>(row.begin(), row.end());
    });
    t.sampler = "glz1:" + to_hex(sha256(write_glz(latents)));
    t.sampler_seed = 0;
    return t;
}

RateTable merge_counts(const RateTable& a, const RateTable& b) {
    if (a.model_digest != b.model_digest) {
        throw DigestError("cannot merge rate tables of different models (" + to_hex(a.model_digest) +
                          " vs " + to_hex(b.model_digest) + ")");
    }
    if (a.layer_shapes != b.layer_shapes || a.convention != b.convention) {
        throw DigestError("cannot merge rate tables with different layer shapes or conventions");
    }
    if (b.num_samples == 0) return a;
    if (a.num_samples == 0) return b;
    if (a.num_samples + b.num_samples > std::numeric_limits<std::uint32_t>::max()) {
        throw ContractError("merged sample count exceeds the u32 counter range");
    }
    RateTable out = a;
    out.num_samples += b.num_samples;
    for (std::size_t i = 0; i < out.counts.size(); ++i) {
        auto& dst = out.counts[i];
        const auto& src = b.counts[i];
        for (std::size_t n = 0; n < dst.size(); ++n) dst[n] += src[n];
    }
    return out;
}

void check_compatible(const RateTable& table, const Generator& g) {
    if (table.model_digest != g.digest()) {
        throw DigestError("rate table belongs to model " + to_hex(table.model_digest) +
                          ", loaded model is " + to_hex(g.digest()));
    }
    if (table.layer_shapes != g.spec().layer_shapes()) {
        throw DigestError("rate table layer shapes do not match the model");
    }
}

std::size_t NeuronSet::count() const {
    return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

NeuronSet lr_set(const RateTable& table, std::size_t layer, double threshold) {
    if (layer >= table.num_layers()) {
        throw ContractError("layer " + std::to_string(layer) + " out of range (table has " +
                            std::to_string(table.num_layers()) + " layers)");
    }
    if (table.num_samples == 0) throw ContractError("rate table has no samples");
    const auto& counts = table.counts[layer];
    const auto n = static_cast<double>(table.num_samples);
    NeuronSet s{layer, std::vector<std::uint8_t>(counts.size())};
    for (std::size_t i = 0; i < counts.size(); ++i) {
        s.mask[i] = static_cast<double>(counts[i]) / n <= threshold ? 1 : 0;
    }
    return s;
}

NeuronSet hr_set(const RateTable& table, std::size_t layer, double threshold) {
    NeuronSet s = lr_set(table, layer, threshold);
    for (auto& b : s.mask) b = b ? 0 : 1;
    return s;
}

Bytes write_grt(const RateTable& table) {
    nlohmann::json shapes = nlohmann::json::array();
    for (const Shape3& s : table.layer_shapes) shapes.push_back({s.channels, s.height, s.width});
    ByteWriter w;
    w.magic("GRT1");
    w.json_header({
        {"num_samples", table.num_samples},
        {"sampler_seed", table.sampler_seed},
        {"sampler", table.sampler},
        {"model_digest", to_hex(table.model_digest)},
        {"convention", table.convention},
        {"layer_shapes", shapes},
    });
    for (const auto& c : table.counts) w.u32s(c);
    return std::move(w).take();
}

RateTable read_grt(std::span<const std::uint8_t> bytes, const std::string& context) {
    ByteReader r(bytes, context);
    r.expect_magic("GRT1");
    const auto header = r.json_header();
    RateTable t;
    try {
        t.num_samples = header.at("num_samples").get<std::uint64_t>();
        t.sampler_seed = header.at("sampler_seed").get<std::uint64_t>();
        t.sampler = header.value("sampler", std::string(kSamplerName));
        t.convention = header.at("convention").get<std::string>();
        t.model_digest = sha256_from_hex(header.at("model_digest").get<std::string>());
        for (const auto& s : header.at("layer_shapes")) {
            t.layer_shapes.push_back({s.at(0).get<std::size_t>(), s.at(1).get<std::size_t>(),
                                      s.at(2).get<std::size_t>()});
        }
    } catch (const nlohmann::json::exception& e) {
        r.fail(std::string("malformed header: ") + e.what());
    } catch (const FormatError& e) {
        r.fail(e.what());
    }
    for (std::size_t i = 0; i < t.layer_shapes.size(); ++i) {
        t.counts.push_back(r.u32s(t.layer_shapes[i].size(), "layer " + std::to_string(i) + " counts"));
        for (std::uint32_t c : t.counts.back()) {
            if (c > t.num_samples) r.fail("layer " + std::to_string(i) + " count exceeds num_samples");
        }
    }
    r.expect_end();
    return t;
}

}  // namespace neuroprobe
