#pragma once

#include <random>
#include <string>

#include "neuroprobe/tensor.hpp"

namespace neuroprobe::testing {

inline std::string fixture(const std::string& name) { return std::string(NEUROPROBE_FIXTURES) + "/" + name; }

inline Tensor3 random_tensor(Shape3 shape, std::mt19937& rng, float lo = -1.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> dist(lo, hi);
    Tensor3 t(shape);
    for (float& v : t.values()) v = dist(rng);
    return t;
}

inline std::vector<float> random_vector(std::size_t n, std::mt19937& rng, float lo = -1.0f, float hi = 1.0f) {
    std::uniform_real_distribution<float> dist(lo, hi);
    std::vector<float> v(n);
    for (float& x : v) x = dist(rng);
    return v;
}

}  // namespace neuroprobe::testing
