#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "imls/vec3.hpp"

namespace imls {

// Mixes a stream id into a base seed so distinct (seed, index) pairs give
// decorrelated engine states. SplitMix64 finalizer.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// Deterministic random stream. Transforms are pinned here instead of relying
// on std::*_distribution, whose output is implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    Rng(std::uint64_t seed, std::uint64_t stream) : engine_(mix_seed(seed, stream)) {}

    // uniform in [0, 1)
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t next_u64() { return engine_(); }

    // standard normal via Box-Muller; one value per call, no caching
    double normal() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    Vec3 normal3(double stddev) { return {stddev * normal(), stddev * normal(), stddev * normal()}; }

    Vec3 unit_vector() {
        Vec3 v;
        double n2 = 0.0;
        do {
            v = {normal(), normal(), normal()};
            n2 = norm_sq(v);
        } while (n2 < 1e-12);
        return v / std::sqrt(n2);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace imls
