#pragma once

#include <cmath>
#include <cstdint>

namespace retina {

// Portable counter-based pseudo-random primitives. Identical seeds reproduce
// identical streams on every platform, which the deterministic acceptance runs
// rely on. Constants are the canonical SplitMix64 set (Steele et al.).
namespace rng {

inline constexpr std::uint64_t golden_gamma = 0x9E3779B97F4A7C15ull;

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += golden_gamma;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Uniform double in [0, 1) from the top 53 bits.
inline double to_unit(std::uint64_t bits) noexcept {
    return double(bits >> 11) * 0x1.0p-53;
}

// Stateless keyed draw: sample `index` of stream `seed`.
inline std::uint64_t keyed(std::uint64_t seed, std::uint64_t index) noexcept {
    return splitmix64(splitmix64(seed) + index * golden_gamma);
}

inline double keyed_unit(std::uint64_t seed, std::uint64_t index) noexcept {
    return to_unit(keyed(seed, index));
}

// Standard normal via Box-Muller on two keyed uniforms (indices 2k, 2k+1).
inline double keyed_gaussian(std::uint64_t seed, std::uint64_t pair_index) noexcept {
    const double u1 = keyed_unit(seed, 2 * pair_index);
    const double u2 = keyed_unit(seed, 2 * pair_index + 1);
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(two_pi * u2);
}

// Sequential generator over the same keyed stream.
class Stream {
public:
    explicit Stream(std::uint64_t seed) noexcept : seed_(seed) {}

    std::uint64_t next_bits() noexcept { return keyed(seed_, index_++); }
    double next_unit() noexcept { return to_unit(next_bits()); }

    // Uniform in [-bound, bound].
    double next_symmetric(double bound) noexcept { return (2.0 * next_unit() - 1.0) * bound; }

private:
    std::uint64_t seed_;
    std::uint64_t index_ = 0;
};

}  // namespace rng
}  // namespace retina
