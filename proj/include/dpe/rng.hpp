#pragma once

#include <cstdint>
#include <random>

namespace dpe {

// splitmix64 finalizer. Stream derivation for a whole run: the environment
// uses stream 0, player i uses stream i. Determinism holds within one
// implementation (mt19937_64 is fully specified by the standard).
inline std::uint64_t mix_seed(std::uint64_t run_seed, std::uint64_t stream) {
    std::uint64_t z = run_seed + (stream + 1) * 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::mt19937_64 make_stream(std::uint64_t run_seed, std::uint64_t stream) {
    return std::mt19937_64(mix_seed(run_seed, stream));
}

// Uniform double in [0,1) from the top 53 bits.
inline double canonical(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli_draw(std::mt19937_64& rng, double p) {
    return canonical(rng) < p;
}

inline bool fair_coin(std::mt19937_64& rng) {
    return (rng() >> 63) != 0;
}

// Uniform integer in [0, n) by rejection, avoiding the implementation-defined
// std::uniform_int_distribution.
inline int uniform_index(std::mt19937_64& rng, int n) {
    const std::uint64_t span = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return static_cast<int>(x % span);
}

}  // namespace dpe
