#include "rspca/rng.hpp"

#include <cmath>

namespace rspca {

std::uint64_t mixed_u64(std::uint64_t seed, std::uint64_t index) {
    // splitmix64: advance by the golden-ratio increment, then finalize.
    std::uint64_t z = seed + (index + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double RandomStream::next_uniform() {
    // Top 52 bits, offset half a step: lands strictly inside (0, 1).
    const std::uint64_t z = next_u64();
    return (static_cast<double>(z >> 12) + 0.5) * 0x1.0p-52;
}

double GaussianStream::next() {
    if (has_spare) {
        has_spare = false;
        return spare;
    }
    const double u1 = uniforms.next_uniform();
    const double u2 = uniforms.next_uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare = radius * std::sin(angle);
    has_spare = true;
    return radius * std::cos(angle);
}

}  // namespace rspca
