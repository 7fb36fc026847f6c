#include "neuroprobe/latents.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "neuroprobe/error.hpp"

namespace neuroprobe {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::vector<float> sample_latent(std::uint64_t seed, std::uint64_t index, std::size_t dim) {
    std::mt19937_64 engine(splitmix64(splitmix64(seed) ^ index));
    auto uniform = [&engine] { return static_cast<double>(engine() >> 11) * 0x1.0p-53; };

    std::vector<float> z(dim);
    for (std::size_t i = 0; i < dim; i += 2) {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        z[i] = static_cast<float>(radius * std::cos(angle));
        if (i + 1 < dim) z[i + 1] = static_cast<float>(radius * std::sin(angle));
    }
    return z;
}

LatentBatch LatentBatch::sample(std::uint64_t seed, std::size_t count, std::size_t dim) {
    LatentBatch b{dim, count, {}};
    b.data.reserve(count * dim);
    for (std::size_t i = 0; i < count; ++i) {
        const auto z = sample_latent(seed, i, dim);
        b.data.insert(b.data.end(), z.begin(), z.end());
    }
    return b;
}

Bytes write_glz(const LatentBatch& batch) {
    ByteWriter w;
    w.magic("GLZ1");
    w.json_header({{"dim", batch.dim}, {"count", batch.count}});
    w.f32s(batch.data);
    return std::move(w).take();
}

LatentBatch read_glz(std::span<const std::uint8_t> bytes, const std::string& context) {
    ByteReader r(bytes, context);
    r.expect_magic("GLZ1");
    const auto header = r.json_header();
    LatentBatch b;
    try {
        b.dim = header.at("dim").get<std::size_t>();
        b.count = header.at("count").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
        r.fail(std::string("malformed header: ") + e.what());
    }
    if (b.dim == 0) r.fail("latent dim must be >= 1");
    b.data = r.f32s(b.dim * b.count, "latent payload");
    r.expect_end();
    return b;
}

}  // namespace neuroprobe
