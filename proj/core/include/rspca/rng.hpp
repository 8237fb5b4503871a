#pragma once

// Deterministic counter-based random streams. Value i of a stream is a pure
// function of (seed, i), so sampling is reproducible bit-for-bit across
// platforms and independent of call interleaving.
//
// The 64-bit mixer is the finalizer of the splitmix64 generator; uniform
// doubles take the top 52 bits onto the open interval (0,1); Gaussians come
// from the Box-Muller transform with the usual spare-value caching.

#include <cstdint>

namespace rspca {

// Mixed 64-bit word number `index` of the stream identified by `seed`.
std::uint64_t mixed_u64(std::uint64_t seed, std::uint64_t index);

struct RandomStream {
    std::uint64_t seed = 0;
    std::uint64_t counter = 0;

    explicit RandomStream(std::uint64_t seed_value = 0) : seed(seed_value) {}

    std::uint64_t next_u64() { return mixed_u64(seed, counter++); }

    // Uniform on the open interval (0, 1); never returns an endpoint.
    double next_uniform();
};

struct GaussianStream {
    RandomStream uniforms;
    bool has_spare = false;
    double spare = 0.0;

    explicit GaussianStream(std::uint64_t seed_value = 0) : uniforms(seed_value) {}

    // Standard normal variate.
    double next();
};

}  // namespace rspca
