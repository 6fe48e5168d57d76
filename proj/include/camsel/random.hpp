#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <utility>

namespace camsel {

// std::uniform_*_distribution and std::shuffle are implementation-defined, so
// seeded draws go through these helpers to stay identical across toolchains.
// std::mt19937_64's output sequence itself is fixed by the standard.
using Rng = std::mt19937_64;

/// Unbiased integer in [0, bound).
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
        v = rng();
    } while (v >= limit);
    return v % bound;
}

/// Double in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Independent seed for sub-stream `stream` (stream 0 returns seed unchanged).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    if (stream == 0) return seed;
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * stream;  // splitmix64
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

template <class T>
void shuffle(std::span<T> items, Rng& rng) {
    for (std::size_t i = items.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform_index(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

}  // namespace camsel
