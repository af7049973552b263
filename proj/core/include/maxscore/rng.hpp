#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace maxscore {

// SplitMix64 step; scrambles nearby seeds so substream start states
// stay uncorrelated.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic substream: the engine for draw `index` depends only on
// (seed, index), never on which thread or in which order it runs. The
// seed is hashed before the index is mixed in; xor-ing the raw seed
// would let small index ranges from nearby seeds collide as sets.
inline std::mt19937_64 substream(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t s = seed;
    std::uint64_t h = splitmix64(s);
    s = h ^ index;
    std::uint64_t a = splitmix64(s);
    std::uint64_t b = splitmix64(s);
    std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
    return std::mt19937_64(seq);
}

// n sign bits packed into 64-bit words; bit i set means the i-th
// Rademacher variable equals -1.
inline std::vector<std::uint64_t> rademacher_words(std::mt19937_64& eng, int n) {
    const int words = (n + 63) / 64;
    std::vector<std::uint64_t> out(static_cast<std::size_t>(words));
    for (int w = 0; w < words; ++w) out[static_cast<std::size_t>(w)] = eng();
    if (n % 64 != 0) out.back() &= (~0ULL) >> (64 - n % 64);
    return out;
}

// Uniform draw strictly inside (0,1); guards the measure-zero endpoint so
// inverse-CDF transforms stay finite.
inline double open_unit_uniform(std::mt19937_64& eng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double p = u(eng);
    while (p <= 0.0 || p >= 1.0) p = u(eng);
    return p;
}

} // namespace maxscore
